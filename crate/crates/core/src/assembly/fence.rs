/// A fenced code block found in raw text, before any origin or path
/// information is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFence {
    /// Info string following the opening fence, lowercased, if non-empty.
    pub language_hint: Option<String>,
    /// Fence body, byte-exact as it appears between the fence lines.
    pub text: String,
    /// Byte offset of the opening fence line within the scanned text.
    pub start_offset: usize,
    /// Byte offset just past the block (after the closing fence line, or end
    /// of text when unterminated).
    pub end_offset: usize,
    /// The closing fence was missing; the body runs to end of text.
    pub unterminated: bool,
}

/// Scans `text` for triple-backtick fences and returns every block in order.
///
/// An unterminated fence is recovered to the end of the text rather than
/// dropped. Fence markers may be indented by up to three spaces. The body is
/// preserved byte-exact, so every returned `text` is a verbatim substring of
/// the input.
pub fn scan_fences(text: &str) -> Vec<RawFence> {
    let mut fences = Vec::new();
    let mut open: Option<(Option<String>, usize, usize)> = None; // (hint, fence start, body start)
    let mut offset = 0;

    for line in split_inclusive_lines(text) {
        let line_start = offset;
        offset += line.len();
        let content = line.strip_suffix('\n').unwrap_or(line);
        let content = content.strip_suffix('\r').unwrap_or(content);

        if let Some(rest) = fence_marker(content) {
            match &open {
                None => {
                    let hint = rest.trim();
                    let hint = if hint.is_empty() {
                        None
                    } else {
                        Some(hint.to_ascii_lowercase())
                    };
                    open = Some((hint, line_start, line_start + line.len()));
                }
                Some((hint, fence_start, body_start)) => {
                    // Only a bare fence line closes a block; a line with an
                    // info string inside an open fence is body content.
                    if rest.trim().is_empty() {
                        fences.push(RawFence {
                            language_hint: hint.clone(),
                            text: text[*body_start..line_start].to_string(),
                            start_offset: *fence_start,
                            end_offset: offset,
                            unterminated: false,
                        });
                        open = None;
                    }
                }
            }
        }
    }

    if let Some((hint, fence_start, body_start)) = open {
        fences.push(RawFence {
            language_hint: hint,
            text: text[body_start..].to_string(),
            start_offset: fence_start,
            end_offset: text.len(),
            unterminated: true,
        });
    }

    fences
}

/// Returns the text after the backticks when `line` is a fence marker:
/// optionally indented by up to three spaces, then three or more backticks.
fn fence_marker(line: &str) -> Option<&str> {
    let trimmed = line.trim_start_matches(' ');
    if line.len() - trimmed.len() > 3 {
        return None;
    }
    if !trimmed.starts_with("```") {
        return None;
    }
    Some(trimmed.trim_start_matches('`'))
}

/// Like `str::split_inclusive('\n')` but yields nothing for empty input.
fn split_inclusive_lines(text: &str) -> impl Iterator<Item = &str> {
    text.split_inclusive('\n')
}
