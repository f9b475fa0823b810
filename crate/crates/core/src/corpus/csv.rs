//! Strict RFC-4180 reader.
//!
//! Malformed quoting is an error rather than being folded into the field
//! value, so a broken row is reported where it occurs instead of silently
//! swallowing the rest of the file.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRow {
    /// 1-based line on which the row starts.
    pub line: usize,
    pub fields: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    FieldStart,
    Unquoted,
    Quoted,
    QuoteInQuoted,
}

/// Parses `text` into rows. Error rows are 1-based line numbers of the
/// record start; columns are 1-based field indices. Blank lines are skipped
/// and the final line break is optional.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut rows = Vec::new();
    let mut fields: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut state = State::FieldStart;
    let mut line = 1usize;
    let mut row_line = 1usize;
    let mut chars = text.chars().peekable();

    let parse_err = |row: usize, column: usize, message: &str| Error::Parse {
        row,
        column,
        message: message.to_string(),
    };

    while let Some(c) = chars.next() {
        let newline = c == '\n' || c == '\r';
        if c == '\r' && chars.peek() == Some(&'\n') {
            chars.next();
        }
        match state {
            State::FieldStart | State::Unquoted | State::QuoteInQuoted if newline => {
                let blank = state == State::FieldStart && fields.is_empty();
                if !blank {
                    fields.push(std::mem::take(&mut field));
                    rows.push(CsvRow {
                        line: row_line,
                        fields: std::mem::take(&mut fields),
                    });
                }
                line += 1;
                row_line = line;
                state = State::FieldStart;
            }
            State::FieldStart => match c {
                '"' => state = State::Quoted,
                ',' => fields.push(String::new()),
                other => {
                    field.push(other);
                    state = State::Unquoted;
                }
            },
            State::Unquoted => match c {
                ',' => {
                    fields.push(std::mem::take(&mut field));
                    state = State::FieldStart;
                }
                '"' => {
                    return Err(parse_err(row_line, fields.len() + 1, "quote inside unquoted field"));
                }
                other => field.push(other),
            },
            State::Quoted => match c {
                '"' => state = State::QuoteInQuoted,
                '\r' | '\n' => {
                    field.push('\n');
                    line += 1;
                }
                other => field.push(other),
            },
            State::QuoteInQuoted => match c {
                '"' => {
                    field.push('"');
                    state = State::Quoted;
                }
                ',' => {
                    fields.push(std::mem::take(&mut field));
                    state = State::FieldStart;
                }
                _ => {
                    return Err(parse_err(
                        row_line,
                        fields.len() + 1,
                        "unexpected character after closing quote",
                    ));
                }
            },
        }
    }
    match state {
        State::Quoted => {
            return Err(parse_err(row_line, fields.len() + 1, "unterminated quoted field"));
        }
        State::FieldStart if fields.is_empty() => {}
        _ => {
            fields.push(field);
            rows.push(CsvRow {
                line: row_line,
                fields,
            });
        }
    }
    Ok(rows)
}

/// Quotes a field when needed.
pub fn write_field(out: &mut String, value: &str) {
    if value.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&value.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(text: &str) -> Vec<Vec<String>> {
        parse_csv(text).unwrap().into_iter().map(|r| r.fields).collect()
    }

    #[test]
    fn plain_and_quoted_fields() {
        let rows = fields("id,DESCRIPTION\nr1,\"too hot, room 4\"\nr2,\"say \"\"hi\"\"\"\n");
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1], vec!["r1", "too hot, room 4"]);
        assert_eq!(rows[2], vec!["r2", "say \"hi\""]);
    }

    #[test]
    fn embedded_newline_and_crlf() {
        let rows = parse_csv("a,b\r\n\"x\ny\",z\r\nq,w").unwrap();
        assert_eq!(rows[1].fields, vec!["x\ny", "z"]);
        assert_eq!(rows[1].line, 2);
        assert_eq!(rows[2].line, 4);
    }

    #[test]
    fn empty_fields() {
        let rows = fields("a,b,c\n,,\n\"\",x,\n");
        assert_eq!(rows[1], vec!["", "", ""]);
        assert_eq!(rows[2], vec!["", "x", ""]);
        assert_eq!(fields("a,\"\"")[0], vec!["a", ""]);
        assert_eq!(fields("a,")[0], vec!["a", ""]);
    }

    #[test]
    fn blank_lines_skipped_and_no_trailing_newline() {
        let rows = parse_csv("a\n\nb").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].line, 3);
    }

    #[test]
    fn unterminated_quote_reports_row() {
        let e = parse_csv("id,d\nr1,ok\nr2,\"broken\n").unwrap_err();
        assert!(matches!(e, Error::Parse { row: 3, column: 2, .. }), "{e:?}");
    }

    #[test]
    fn stray_quotes_rejected() {
        assert!(matches!(parse_csv("a,b\"c\n"), Err(Error::Parse { row: 1, column: 2, .. })));
        assert!(matches!(parse_csv("\"a\"b\n"), Err(Error::Parse { row: 1, column: 1, .. })));
    }

    #[test]
    fn writer_round_trips() {
        let mut line = String::new();
        for (i, v) in ["plain", "a,b", "q\"uote", "multi\nline"].iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write_field(&mut line, v);
        }
        assert_eq!(fields(&line)[0], vec!["plain", "a,b", "q\"uote", "multi\nline"]);
    }
}
