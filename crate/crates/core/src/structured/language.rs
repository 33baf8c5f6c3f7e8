use regex::RegexBuilder;

/// Result of a language rewrite; `warning` is set when the old label was not found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewrite {
    pub text: String,
    pub warning: Option<String>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Replaces the first whole-word, case-insensitive occurrence of `old_label` with `new_label`.
pub fn rewrite_language(description: &str, old_label: &str, new_label: &str) -> Rewrite {
    if old_label == new_label || old_label.is_empty() {
        return Rewrite { text: description.to_string(), warning: None };
    }
    let re = RegexBuilder::new(&regex::escape(old_label))
        .case_insensitive(true)
        .build()
        .expect("escaped literal always compiles");
    let mut start = 0;
    while let Some(m) = re.find_at(description, start) {
        let before = description[..m.start()].chars().next_back();
        let after = description[m.end()..].chars().next();
        let left_ok = before.is_none_or(|c| !is_word_char(c)) || !old_label.starts_with(is_word_char);
        let right_ok = after.is_none_or(|c| !is_word_char(c)) || !old_label.ends_with(is_word_char);
        if left_ok && right_ok {
            let text = format!("{}{}{}", &description[..m.start()], new_label, &description[m.end()..]);
            return Rewrite { text, warning: None };
        }
        start = m.start() + description[m.start()..].chars().next().map_or(1, char::len_utf8);
    }
    Rewrite {
        text: description.to_string(),
        warning: Some(format!("label {old_label:?} not found in {description:?}; description left unchanged")),
    }
}
