/// Pull ST code out of a chat response.
///
/// Fenced blocks are returned verbatim and in order. Without fences, the
/// longest run of lines from a `PROGRAM`/`FUNCTION_BLOCK` header to the last
/// matching `END_` keyword is returned. Otherwise the result is empty.
pub fn extract_st(response: &str) -> Vec<String> {
    let fenced = fenced_blocks(response);
    if !fenced.is_empty() {
        return fenced;
    }
    bare_region(response).into_iter().collect()
}

fn fence_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    if t.starts_with("```") {
        Some("```")
    } else if t.starts_with("~~~") {
        Some("~~~")
    } else {
        None
    }
}

fn fenced_blocks(response: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut open: Option<(&str, Vec<&str>)> = None;
    for line in response.lines() {
        match (&mut open, fence_marker(line)) {
            (None, Some(m)) => open = Some((m, Vec::new())),
            (Some((m, _)), Some(close)) if *m == close && line.trim() == close => {
                let (_, body) = open.take().expect("open fence");
                let mut text = body.join("\n");
                if !body.is_empty() {
                    text.push('\n');
                }
                out.push(text);
            }
            (Some((_, body)), _) => body.push(line),
            (None, None) => {}
        }
    }
    out
}

fn first_word(line: &str) -> String {
    line.split_whitespace().next().unwrap_or("").to_ascii_uppercase()
}

fn bare_region(response: &str) -> Option<String> {
    let lines: Vec<&str> = response.lines().collect();
    let mut best: Option<(usize, usize)> = None;
    for (start, line) in lines.iter().enumerate() {
        let end_kw = match first_word(line).as_str() {
            "PROGRAM" => "END_PROGRAM",
            "FUNCTION_BLOCK" => "END_FUNCTION_BLOCK",
            _ => continue,
        };
        let end = (start..lines.len())
            .rev()
            .find(|&i| first_word(lines[i]).trim_end_matches(';') == end_kw);
        if let Some(end) = end {
            if best.is_none_or(|(s, e)| end - start > e - s) {
                best = Some((start, end));
            }
        }
    }
    best.map(|(s, e)| {
        let mut text = lines[s..=e].join("\n");
        text.push('\n');
        text
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fence_verbatim() {
        let r = "Here you go:\n```iecst\nPROGRAM P\n  x := 1;\nEND_PROGRAM\n```\nDone.";
        assert_eq!(extract_st(r), vec!["PROGRAM P\n  x := 1;\nEND_PROGRAM\n"]);
    }

    #[test]
    fn two_fences_in_order() {
        let r = "```\nA\n```\ntext\n~~~st\nB\n~~~\n";
        assert_eq!(extract_st(r), vec!["A\n", "B\n"]);
    }

    #[test]
    fn prose_only_is_empty() {
        assert!(extract_st("I cannot see any controllers in this image.").is_empty());
        assert!(extract_st("").is_empty());
    }

    #[test]
    fn bare_code_falls_back_to_longest_region() {
        let r = "Sure.\nFUNCTION_BLOCK F\nEND_FUNCTION_BLOCK\nPROGRAM Main\nVAR x : INT; END_VAR\nx := 1;\nEND_PROGRAM\nHope this helps.";
        assert_eq!(extract_st(r), vec!["PROGRAM Main\nVAR x : INT; END_VAR\nx := 1;\nEND_PROGRAM\n"]);
        let r = "FUNCTION_BLOCK A\nEND_FUNCTION_BLOCK\nmore\nFUNCTION_BLOCK B\nEND_FUNCTION_BLOCK\n";
        assert_eq!(extract_st(r), vec!["FUNCTION_BLOCK A\nEND_FUNCTION_BLOCK\nmore\nFUNCTION_BLOCK B\nEND_FUNCTION_BLOCK\n"]);
    }

    #[test]
    fn unterminated_fence_is_dropped() {
        assert!(extract_st("```\nPROGRAM P").is_empty());
    }
}
