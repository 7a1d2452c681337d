//! Static types and the conversion rules between them.

use std::fmt;

use crate::syntax::ast::{ElementaryType, TypeKind, TypeRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Elem(ElementaryType),
    /// Integer literal; fits any numeric target.
    AnyInt,
    /// Function block instance of the named type.
    Fb(String),
    /// Already reported; suppresses follow-up errors.
    Error,
}

use ElementaryType::{Bool, Dint, Int, Real, Time};

impl Ty {
    pub const BOOL: Ty = Ty::Elem(Bool);
    pub const REAL: Ty = Ty::Elem(Real);
    pub const TIME: Ty = Ty::Elem(Time);

    pub fn of(ty: &TypeRef) -> Ty {
        match &ty.kind {
            TypeKind::Elementary(e) => Ty::Elem(*e),
            TypeKind::Named(n) => Ty::Fb(n.to_ascii_uppercase()),
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Ty::Error)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::AnyInt | Ty::Elem(Int | Dint | Real))
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Ty::AnyInt | Ty::Elem(Int | Dint))
    }

    pub fn is_time(&self) -> bool {
        *self == Ty::TIME
    }

    fn rank(&self) -> u8 {
        match self {
            Ty::AnyInt => 0,
            Ty::Elem(Int) => 1,
            Ty::Elem(Dint) => 2,
            Ty::Elem(Real) => 3,
            _ => u8::MAX,
        }
    }

    /// Result type of arithmetic on two numeric operands.
    pub fn join(&self, other: &Ty) -> Ty {
        if self.rank() >= other.rank() {
            self.clone()
        } else {
            other.clone()
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Elem(e) => f.write_str(e.name()),
            Ty::AnyInt => f.write_str("integer literal"),
            Ty::Fb(n) => write!(f, "{n} instance"),
            Ty::Error => f.write_str("<error>"),
        }
    }
}

/// Whether a value of type `src` may be stored into `dst`. Widening
/// INT -> DINT -> REAL is implicit; narrowing is not.
pub fn assignable(dst: &Ty, src: &Ty) -> bool {
    if dst.is_error() || src.is_error() || dst == src {
        return true;
    }
    match (dst, src) {
        (Ty::Elem(Int | Dint | Real), Ty::AnyInt) => true,
        (Ty::Elem(Dint | Real), Ty::Elem(Int)) => true,
        (Ty::Elem(Real), Ty::Elem(Dint)) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widening_only() {
        let int = Ty::Elem(Int);
        let dint = Ty::Elem(Dint);
        assert!(assignable(&Ty::REAL, &int));
        assert!(assignable(&Ty::REAL, &dint));
        assert!(assignable(&dint, &int));
        assert!(!assignable(&int, &dint));
        assert!(!assignable(&int, &Ty::REAL));
        assert!(assignable(&int, &Ty::AnyInt));
        assert!(!assignable(&Ty::TIME, &Ty::AnyInt));
        assert!(!assignable(&Ty::BOOL, &Ty::AnyInt));
    }

    #[test]
    fn join_picks_widest() {
        assert_eq!(Ty::AnyInt.join(&Ty::Elem(Int)), Ty::Elem(Int));
        assert_eq!(Ty::Elem(Dint).join(&Ty::Elem(Int)), Ty::Elem(Dint));
        assert_eq!(Ty::Elem(Int).join(&Ty::REAL), Ty::REAL);
        assert_eq!(Ty::AnyInt.join(&Ty::AnyInt), Ty::AnyInt);
    }
}
