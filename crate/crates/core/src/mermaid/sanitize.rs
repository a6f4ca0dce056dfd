/// Directives that only affect rendering.
const DIRECTIVES: &[&str] = &["style", "classDef", "class", "click", "linkStyle"];

/// Strips comments, styling directives and `:::class` shorthands and
/// normalizes line endings to LF. Node, edge and label text is untouched.
pub fn sanitize(code: &str) -> String {
    let normalized = code.replace("\r\n", "\n").replace('\r', "\n");
    let mut out: Vec<String> = Vec::new();
    for line in normalized.split('\n') {
        let line = strip_class_shorthand(line);
        let text = match find_outside_quotes(&line, "%%") {
            // Whole-line comment.
            Some(pos) if line[..pos].trim().is_empty() => continue,
            Some(pos) => line[..pos].trim_end(),
            None => line.as_str(),
        };
        let first = text.split_whitespace().next().unwrap_or("");
        if DIRECTIVES.contains(&first) {
            continue;
        }
        out.push(text.to_string());
    }
    out.join("\n")
}

fn find_outside_quotes(line: &str, needle: &str) -> Option<usize> {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        if c == '"' {
            in_quote = !in_quote;
        } else if !in_quote && line[i..].starts_with(needle) {
            return Some(i);
        }
    }
    None
}

fn strip_class_shorthand(line: &str) -> String {
    let mut s = line.to_string();
    while let Some(pos) = find_outside_quotes(&s, ":::") {
        let rest = &s[pos + 3..];
        let end = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(rest.len());
        s.replace_range(pos..pos + 3 + end, "");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_trailing_comment() {
        assert_eq!(
            sanitize("G -- No --> C  %% recovered"),
            "G -- No --> C"
        );
    }

    #[test]
    fn comment_free_input_is_unchanged() {
        let code = "flowchart TD\n  A[Start] --> B{ok?}\n  B -->|yes| C\n";
        assert_eq!(sanitize(code), code);
    }

    #[test]
    fn removes_directives_and_comment_lines() {
        let code = "flowchart TD\nclassDef red fill:#f00\n%% note\nA --> B\nstyle A fill:#fff\nclick A call cb()\nlinkStyle 0 stroke:#f00\nclass A red";
        assert_eq!(sanitize(code), "flowchart TD\nA --> B");
    }

    #[test]
    fn normalizes_line_endings_and_class_shorthand() {
        assert_eq!(sanitize("flowchart TD\r\nA:::hot --> B\r"), "flowchart TD\nA --> B\n");
    }

    #[test]
    fn keeps_percent_inside_quoted_label() {
        let code = "A[\"100%% done\"] --> B";
        assert_eq!(sanitize(code), code);
    }

    proptest! {
        #[test]
        fn idempotent(s in "[A-Za-z %:;\\-\\[\\]\"\r\n>|]{0,80}") {
            let once = sanitize(&s);
            prop_assert_eq!(sanitize(&once), once);
        }
    }
}
