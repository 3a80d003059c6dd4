//! Parsing of group sources, label lists and cut descriptions.

use std::collections::BTreeMap;
use std::path::Path;

use finmf_core::engine::LabelCombo;
use finmf_core::group::preset_group_with_cap;
use finmf_core::{Cut, DrinfeldDouble, FiniteGroup, Preset};

use crate::error::CliError;

/// `preset:NAME`, `file:PATH`, or a bare preset name.
pub fn load_group(source: &str, order_cap: usize) -> Result<FiniteGroup, CliError> {
    if let Some(path) = source.strip_prefix("file:") {
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| CliError::Usage(format!("cannot read group file `{path}`: {e}")))?;
        let g = FiniteGroup::from_json(&text)?;
        if g.order() > order_cap {
            return Err(CliError::Cap(format!("group order {} exceeds cap {order_cap}", g.order())));
        }
        return Ok(g);
    }
    let name = source.strip_prefix("preset:").unwrap_or(source);
    Ok(preset_group_with_cap(&Preset::parse(name)?, order_cap)?)
}

/// Splits at `sep` outside parentheses and brackets.
fn split_top(text: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

/// A formal combination such as `vacuum`, `3`, `([(12)],r1)` or
/// `2*([(12)],r1)+vacuum`.
pub fn parse_combo(double: &DrinfeldDouble, text: &str) -> Result<LabelCombo, CliError> {
    let mut acc: BTreeMap<usize, u64> = BTreeMap::new();
    for term in split_top(text, '+') {
        let term = term.trim();
        let (coeff, name) = match term.split_once('*') {
            Some((k, rest)) if k.trim().chars().all(|c| c.is_ascii_digit()) && !k.trim().is_empty() => {
                let k = k.trim().parse::<u64>().map_err(|e| CliError::Usage(format!("bad coefficient `{k}`: {e}")))?;
                (k, rest.trim())
            }
            _ => (1, term),
        };
        let label = double.parse_label(name)?;
        *acc.entry(label.index).or_insert(0) += coeff;
    }
    Ok(acc.into_iter().filter(|&(_, c)| c > 0).collect())
}

/// Comma-separated combinations; an empty string gives no labels.
pub fn parse_labels(double: &DrinfeldDouble, text: &str) -> Result<Vec<LabelCombo>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top(text, ',').into_iter().map(|t| parse_combo(double, t)).collect()
}

pub fn combo_name(double: &DrinfeldDouble, combo: &LabelCombo) -> String {
    if combo.is_empty() {
        return "0".into();
    }
    combo
        .iter()
        .map(|&(l, c)| {
            let name = double.label_name(&double.labels()[l]);
            if c == 1 {
                name
            } else {
                format!("{c}*{name}")
            }
        })
        .collect::<Vec<_>>()
        .join("+")
}

/// `nonseparating`, or `separating:GENUS[:NAME,NAME,...]`.
pub fn parse_cut(text: &str) -> Result<Cut, CliError> {
    let mut parts = text.splitn(3, ':');
    match parts.next().map(str::to_ascii_lowercase).as_deref() {
        Some("nonseparating" | "non-separating") if parts.next().is_none() => Ok(Cut::NonSeparating),
        Some("separating") => {
            let genus = parts
                .next()
                .ok_or_else(|| CliError::Usage("separating cut needs a genus, e.g. separating:0:p1,p2".into()))?
                .trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("bad cut genus: {e}")))?;
            let subset = parts
                .next()
                .map(|names| {
                    names.split([',', '+']).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
                })
                .unwrap_or_default();
            Ok(Cut::Separating { genus, subset })
        }
        _ => Err(CliError::Usage(format!("unknown cut `{text}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use finmf_core::preset_group;
    use std::sync::Arc;

    fn s3() -> DrinfeldDouble {
        DrinfeldDouble::new(Arc::new(preset_group(&Preset::Symmetric(3)).unwrap())).unwrap()
    }

    #[test]
    fn splitting_respects_brackets() {
        assert_eq!(split_top("vacuum,([(12)],r1),3", ','), vec!["vacuum", "([(12)],r1)", "3"]);
        assert_eq!(split_top("", ','), vec![""]);
    }

    #[test]
    fn label_lists() {
        let d = s3();
        assert_eq!(parse_labels(&d, "").unwrap(), Vec::<LabelCombo>::new());
        assert_eq!(parse_labels(&d, "vacuum").unwrap(), vec![vec![(0, 1)]]);
        assert_eq!(
            parse_labels(&d, "vacuum, ([(12)],r1), 2*3+vacuum+3").unwrap(),
            vec![vec![(0, 1)], vec![(4, 1)], vec![(0, 1), (3, 3)]]
        );
        assert_eq!(parse_labels(&d, "([(12)], irrep#0, dim 3)").unwrap(), vec![vec![(3, 1)]]);
        assert!(matches!(parse_labels(&d, "vacuum,bogus"), Err(CliError::Usage(_))));
        assert_eq!(combo_name(&d, &vec![(0, 1), (3, 2)]), "([()], irrep#0, dim 1)+2*([(12)], irrep#0, dim 3)");
    }

    #[test]
    fn cuts() {
        assert_eq!(parse_cut("nonseparating").unwrap(), Cut::NonSeparating);
        assert_eq!(
            parse_cut("separating:0:p1,p2").unwrap(),
            Cut::Separating { genus: 0, subset: vec!["p1".into(), "p2".into()] }
        );
        assert_eq!(parse_cut("separating:1").unwrap(), Cut::Separating { genus: 1, subset: vec![] });
        assert!(parse_cut("diagonal").is_err());
        assert!(parse_cut("separating:x").is_err());
    }

    #[test]
    fn group_sources() {
        assert_eq!(load_group("preset:S3", 2000).unwrap().order(), 6);
        assert_eq!(load_group("Q8", 2000).unwrap().order(), 8);
        assert!(matches!(load_group("preset:S6", 100), Err(CliError::Cap(_))));
        assert!(matches!(load_group("preset:nope", 100), Err(CliError::Usage(_))));
        assert!(matches!(load_group("file:/nonexistent/g.json", 100), Err(CliError::Usage(_))));
    }
}
