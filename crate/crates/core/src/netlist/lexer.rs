//! Line joining, tokenization and engineering-notation numbers.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub text: String,
    /// 1-based column in the physical line the token came from.
    pub column: usize,
    pub line: usize,
}

/// One logical card after `+` continuation joining.
#[derive(Debug, Clone)]
pub(crate) struct Statement {
    pub line: usize,
    pub tokens: Vec<Token>,
    /// Position (line, column) of an unmatched parenthesis, if any.
    pub unbalanced: Option<(usize, usize)>,
    depth: i32,
    last_open: (usize, usize),
}

impl Statement {
    fn new(line: usize, tokens: Vec<Token>) -> Self {
        Self { line, tokens, unbalanced: None, depth: 0, last_open: (line, 1) }
    }

    fn scan_parens(&mut self, s: &str, line: usize, offset: usize) {
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => {
                    self.depth += 1;
                    self.last_open = (line, offset + i + 1);
                }
                ')' => {
                    self.depth -= 1;
                    if self.depth < 0 && self.unbalanced.is_none() {
                        self.unbalanced = Some((line, offset + i + 1));
                    }
                }
                _ => {}
            }
        }
    }

    fn finish(&mut self) {
        if self.depth > 0 && self.unbalanced.is_none() {
            self.unbalanced = Some(self.last_open);
        }
    }
}

/// Splits the text into logical statements. The first line is the title and
/// is returned separately. `*` lines and `;` trailing comments are dropped.
pub(crate) fn statements(text: &str) -> (String, Vec<Statement>) {
    let mut lines = text.lines().enumerate();
    let title = lines.next().map(|(_, l)| l.trim().to_string()).unwrap_or_default();
    let mut out: Vec<Statement> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let content = match raw.find(';') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = content.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('+') {
            let offset = content.len() - rest.len();
            let toks = tokenize(rest, line_no, offset);
            if let Some(last) = out.last_mut() {
                last.tokens.extend(toks);
                last.scan_parens(rest, line_no, offset);
                continue;
            }
            let mut st = Statement::new(line_no, toks);
            st.scan_parens(rest, line_no, offset);
            out.push(st);
            continue;
        }
        let mut st = Statement::new(line_no, tokenize(content, line_no, 0));
        st.scan_parens(content, line_no, 0);
        out.push(st);
    }
    out.iter_mut().for_each(Statement::finish);
    (title, out)
}

/// Splits on whitespace, commas and parentheses; `=` becomes its own token.
fn tokenize(s: &str, line: usize, offset: usize) -> Vec<Token> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    let flush = |cur: &mut String, start: usize, toks: &mut Vec<Token>| {
        if !cur.is_empty() {
            toks.push(Token { text: std::mem::take(cur), column: offset + start + 1, line });
        }
    };
    for (i, ch) in s.char_indices() {
        match ch {
            c if c.is_whitespace() || c == ',' || c == '(' || c == ')' => {
                flush(&mut cur, start, &mut toks);
            }
            '=' => {
                flush(&mut cur, start, &mut toks);
                toks.push(Token { text: "=".into(), column: offset + i + 1, line });
            }
            c => {
                if cur.is_empty() {
                    start = i;
                }
                cur.push(c);
            }
        }
    }
    flush(&mut cur, start, &mut toks);
    toks
}

/// Parses a SPICE number: a decimal float optionally followed by an
/// engineering suffix (`f p n u m k meg g t`, case-insensitive) and ignored
/// unit letters (`10uF`, `5V`).
pub fn parse_number(s: &str) -> Option<f64> {
    let bytes = s.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i == digits_start || (i == digits_start + 1 && bytes[digits_start] == b'.') {
        return None;
    }
    // Exponent only if followed by digits, so "1meg" is not "1e..".
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_digits = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_digits {
            i = j;
        }
    }
    let mantissa: f64 = s[..i].parse().ok()?;
    let suffix = s[i..].to_ascii_lowercase();
    if !suffix.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let scale = if suffix.starts_with("meg") {
        1e6
    } else if suffix.starts_with("mil") {
        25.4e-6
    } else {
        match suffix.chars().next() {
            None => 1.0,
            Some('f') => 1e-15,
            Some('p') => 1e-12,
            Some('n') => 1e-9,
            Some('u') => 1e-6,
            Some('m') => 1e-3,
            Some('k') => 1e3,
            Some('g') => 1e9,
            Some('t') => 1e12,
            // Bare unit letters (V, A, s, ohm, F is femto) carry no scale.
            Some('v') | Some('a') | Some('s') | Some('o') | Some('h') => 1.0,
            Some(_) => return None,
        }
    };
    let v = mantissa * scale;
    v.is_finite().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engineering_suffixes() {
        let cases = [
            ("1k", 1e3),
            ("4.7K", 4.7e3),
            ("10u", 10e-6),
            ("2meg", 2e6),
            ("2MEG", 2e6),
            ("3m", 3e-3),
            ("5n", 5e-9),
            ("1p", 1e-12),
            ("1f", 1e-15),
            ("1g", 1e9),
            ("1e-3", 1e-3),
            ("-2.5e+2", -250.0),
            ("1.5", 1.5),
            ("10uF", 10e-6),
            ("5V", 5.0),
            (".5", 0.5),
            ("1e3k", 1e6),
        ];
        for (s, v) in cases {
            let got = parse_number(s).unwrap_or_else(|| panic!("{s}"));
            assert!((got - v).abs() <= 1e-12 * v.abs(), "{s}: {got} != {v}");
        }
    }

    #[test]
    fn malformed_numbers() {
        for s in ["abc", "", "1.2.3", "--1", "1x", "k", ".", "1e-3z"] {
            assert_eq!(parse_number(s), None, "{s}");
        }
    }

    #[test]
    fn continuation_and_comments() {
        let text = "title\n* comment\nR1 a b\n+ 1k ; trailing\n\nV1 a 0 5\n";
        let (title, st) = statements(text);
        assert_eq!(title, "title");
        assert_eq!(st.len(), 2);
        let texts: Vec<_> = st[0].tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["R1", "a", "b", "1k"]);
        assert_eq!(st[0].tokens[3].line, 4);
        assert_eq!(st[1].line, 6);
    }

    #[test]
    fn tokenizer_splits_parens_and_equals() {
        let toks = tokenize("V1 in 0 PULSE(0 5, 1n) W=10u", 1, 0);
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["V1", "in", "0", "PULSE", "0", "5", "1n", "W", "=", "10u"]);
        assert_eq!(toks[3].column, 9);
    }
}
