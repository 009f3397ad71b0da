//! Prompt templates and placeholder substitution.
//!
//! Templates live in `templates/*.txt` and are compiled in. A placeholder is
//! `{name}` with a lowercase identifier; everything else is copied verbatim.

use crate::error::{Error, Result};

/// Bumped whenever any template text changes.
pub const TEMPLATE_VERSION: u32 = 1;

pub const FUNC_LOCALIZE: &str = include_str!("../../templates/func_localize.txt");
pub const ISSUE_LOCALIZE: &str = include_str!("../../templates/issue_localize.txt");
pub const DEP_SEARCH: &str = include_str!("../../templates/dep_search.txt");
pub const FUNC_GEN: &str = include_str!("../../templates/func_gen.txt");

/// Replacement body line for masked functions (two spaces before `#`).
pub const MASK_LINE: &str = "pass  # TODO: Implement this function";

/// Comment a dependency-search agent must place above each dependency.
pub fn dependency_comment(func_name: &str) -> String {
    format!("# this function/class is called by the {func_name} function")
}

/// Template for a task kind given by name (`FuncLocalize`, `func-localize`, `func_localize`).
pub fn template(kind: &str) -> Result<&'static str> {
    let key: String = kind
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    match key.as_str() {
        "funclocalize" => Ok(FUNC_LOCALIZE),
        "issuelocalize" => Ok(ISSUE_LOCALIZE),
        "depsearch" => Ok(DEP_SEARCH),
        "funcgen" => Ok(FUNC_GEN),
        _ => Err(Error::Template(format!("unknown task kind {kind:?}"))),
    }
}

/// Placeholder names in order of first appearance.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for (_, name) in scan(template) {
        if let Some(name) = name {
            if !out.contains(&name) {
                out.push(name);
            }
        }
    }
    out
}

/// Splits a template into (literal, placeholder) pieces.
fn scan(template: &str) -> Vec<(&str, Option<&str>)> {
    let mut pieces = Vec::new();
    let bytes = template.as_bytes();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let name_len = bytes[i + 1..]
                .iter()
                .take_while(|b| b.is_ascii_lowercase() || **b == b'_')
                .count();
            if name_len > 0 && bytes.get(i + 1 + name_len) == Some(&b'}') {
                pieces.push((
                    &template[literal_start..i],
                    Some(&template[i + 1..i + 1 + name_len]),
                ));
                i += name_len + 2;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    pieces.push((&template[literal_start..], None));
    pieces
}

/// Substitutes every placeholder of `template`. Values are inserted verbatim,
/// never rescanned.
pub fn render(template: &str, params: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    for (literal, name) in scan(template) {
        out.push_str(literal);
        if let Some(name) = name {
            let value = params
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Template(format!("missing placeholder {{{name}}}")))?;
            out.push_str(value);
        }
    }
    Ok(out)
}

pub fn render_prompt(kind: &str, params: &[(&str, &str)]) -> Result<String> {
    render(template(kind)?, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_placeholders() {
        assert_eq!(
            placeholders(FUNC_LOCALIZE),
            [
                "workspace_dir",
                "module_type",
                "brief_description",
                "target_type"
            ]
        );
        assert_eq!(placeholders(ISSUE_LOCALIZE), ["problem_statement"]);
        assert_eq!(
            placeholders(DEP_SEARCH),
            ["workspace_dir", "func_name", "line_number", "file_path"]
        );
        assert_eq!(
            placeholders(FUNC_GEN),
            ["workspace_dir", "func_name", "file_path", "docstring"]
        );
    }

    #[test]
    fn values_are_not_rescanned() {
        let out = render("a {x} b", &[("x", "{x}")]).unwrap();
        assert_eq!(out, "a {x} b");
    }

    #[test]
    fn missing_and_unknown() {
        assert!(matches!(render("{x}", &[]), Err(Error::Template(_))));
        assert!(matches!(
            render_prompt("Refactor", &[]),
            Err(Error::Template(_))
        ));
    }

    #[test]
    fn dep_search_comment_is_embedded() {
        let text = render_prompt(
            "DepSearch",
            &[
                ("workspace_dir", "/workspace/r"),
                ("func_name", "top"),
                ("line_number", "7"),
                ("file_path", "pkg/a.py"),
            ],
        )
        .unwrap();
        assert!(text.contains("this function/class is called by the top function"));
        assert!(text.contains(&format!("`{}`", dependency_comment("top"))));
        assert!(text.contains("located at line 7 in `pkg/a.py`"));
    }
}
