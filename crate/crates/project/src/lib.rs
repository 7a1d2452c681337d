//! Project assembly: `.st` file output, PLCopen TC6 XML export and the
//! matching import used to verify exports.

pub mod gate;
pub mod manifest;
pub mod plcopen;
pub mod st_files;

pub use gate::{quality_gate, Rejection};
pub use manifest::{assemble, ManifestError, PouEntry, PouType, ProjectManifest, EPOCH};
pub use plcopen::{export_plcopen, import_plcopen, ExportError, ImportError, ImportedProject};
pub use st_files::{file_name, header_comment, render_artifact, write_st_files, Artifact, WriteError};
