//! Plain-text file formats.
//!
//! Distribution files hold one `weight value` pair per line. Family files
//! start with `n=<ground size>` and list one member per line, either as
//! comma-separated 1-based element labels or as the literal `empty`. In both
//! formats `#` starts a comment and blank lines are ignored.
//!
//! ```text
//! # two atoms
//! 0.5 0.25
//! 0.5 0.75
//! ```
//!
//! ```text
//! n=3
//! empty
//! 1
//! 1,3
//! ```

use std::fmt::Write as _;

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::lab::uniform_grid;
use crate::setfamily::{SetFamily, MAX_GROUND};
use crate::tolerance::FILE_WEIGHT_SUM_TOL;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_real(line: usize, token: &str) -> Result<f64> {
    let x: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("'{token}' is not a number")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("'{token}' is not finite")));
    }
    Ok(x)
}

/// Reads a distribution file. Weights summing to within `1e-6` of 1 are
/// renormalized; anything further off is rejected.
pub fn parse_distribution(text: &str) -> Result<FiniteDistribution> {
    let mut pairs = Vec::new();
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let (Some(w), Some(v), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err(line, "expected `weight value`"));
        };
        let weight = parse_real(line, w)?;
        let value = parse_real(line, v)?;
        if weight < 0.0 {
            return Err(parse_err(line, format!("negative weight {weight}")));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(parse_err(line, format!("value {value} is outside [0, 1]")));
        }
        pairs.push((weight, value));
    }
    if pairs.is_empty() {
        return Err(parse_err(0, "no atoms"));
    }
    FiniteDistribution::with_sum_tolerance(pairs, FILE_WEIGHT_SUM_TOL)
}

/// Writes a distribution with shortest round-trip float formatting.
pub fn write_distribution(d: &FiniteDistribution) -> String {
    let mut out = String::new();
    for (p, x) in d.pairs() {
        let _ = writeln!(out, "{p} {x}");
    }
    out
}

/// Reads a family file.
pub fn parse_family(text: &str) -> Result<SetFamily> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(0, "missing `n=` header"))?;
    let n: u8 = header
        .strip_prefix("n=")
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .filter(|&n| n <= MAX_GROUND)
        .ok_or_else(|| {
            parse_err(line, format!("expected `n=<0..={MAX_GROUND}>`, found '{header}'"))
        })?;

    let mut members = Vec::new();
    for (line, content) in lines {
        if content == "empty" {
            members.push(0);
            continue;
        }
        let mut mask = 0u32;
        for token in content.split(',') {
            let token = token.trim();
            let label: u32 = token
                .parse()
                .map_err(|_| parse_err(line, format!("'{token}' is not an element label")))?;
            if label == 0 || label > u32::from(n) {
                return Err(parse_err(line, format!("element {label} is outside 1..={n}")));
            }
            mask |= 1 << (label - 1);
        }
        members.push(mask);
    }
    SetFamily::new(n, members)
}

/// Writes a family in canonical order: members by ascending bitmask,
/// elements ascending within a member.
pub fn write_family(f: &SetFamily) -> String {
    let mut out = format!("n={}\n", f.ground_n());
    for &m in f.members() {
        if m == 0 {
            out.push_str("empty\n");
        } else {
            let labels: Vec<String> = SetFamily::elements(m).map(|e| e.to_string()).collect();
            out.push_str(&labels.join(","));
            out.push('\n');
        }
    }
    out
}

/// `lo:hi:step`, as taken by `--beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        uniform_grid(self.lo, self.hi, self.step)
    }
}

pub fn parse_range(s: &str) -> Result<RangeSpec> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(parse_err(1, format!("expected `lo:hi:step`, found '{s}'")));
    };
    let spec = RangeSpec {
        lo: parse_real(1, lo.trim())?,
        hi: parse_real(1, hi.trim())?,
        step: parse_real(1, step.trim())?,
    };
    if !(spec.lo < spec.hi) || !(spec.step > 0.0) {
        return Err(parse_err(1, format!("range '{s}' is empty or has a nonpositive step")));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_file() {
        let d = parse_distribution("# comment\n0.5 0.25\n\n0.5 0.75 # trailing\n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.mean().get(), 0.5);
    }

    #[test]
    fn distribution_file_renormalizes_within_tolerance() {
        let d = parse_distribution("0.5000004 0.1\n0.5 0.2\n").unwrap();
        let total: f64 = d.pairs().map(|p| p.0).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(parse_distribution("0.6 0.1\n0.5 0.2\n").is_err());
    }

    #[test]
    fn distribution_file_errors_carry_line_numbers() {
        let e = parse_distribution("0.5 0.1\n0.5 x\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 2, msg: "'x' is not a number".into() });
        assert!(matches!(parse_distribution("1 1.5"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_distribution("1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_distribution("1 0.5 3"), Err(Error::Parse { .. })));
        assert!(matches!(parse_distribution("-1 0.5\n2 0.5"), Err(Error::Parse { .. })));
        assert!(matches!(parse_distribution("inf 0.5"), Err(Error::Parse { .. })));
        assert!(parse_distribution("# nothing\n").is_err());
    }

    #[test]
    fn distribution_roundtrip_is_exact() {
        let d = FiniteDistribution::new([(0.1, 0.3), (0.2, 1.0 / 3.0), (0.7, 0.0)]).unwrap();
        assert_eq!(parse_distribution(&write_distribution(&d)).unwrap(), d);
    }

    #[test]
    fn family_file() {
        let f = parse_family("n=2\n1\n2\n1,2\n").unwrap();
        assert_eq!(f.members(), &[1, 2, 3]);
        let f = parse_family("# header\nn=3\n3, 1\nempty\n").unwrap();
        assert_eq!(f.members(), &[0, 5]);
        assert_eq!(write_family(&f), "n=3\nempty\n1,3\n");
    }

    #[test]
    fn family_file_errors() {
        assert!(matches!(parse_family(""), Err(Error::Parse { line: 0, .. })));
        assert!(matches!(parse_family("m=2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_family("n=17"), Err(Error::Parse { .. })));
        assert!(matches!(parse_family("n=2\n3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_family("n=2\n0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_family("n=2\n1,,2\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_family("n=2\nfoo\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn range_spec() {
        let r = parse_range("0.55:0.70:0.01").unwrap();
        assert_eq!(r, RangeSpec { lo: 0.55, hi: 0.70, step: 0.01 });
        assert_eq!(r.points().unwrap().len(), 16);
        assert!(parse_range("0.5:0.4:0.1").is_err());
        assert!(parse_range("0.5:0.6").is_err());
        assert!(parse_range("0.5:0.6:0").is_err());
        assert!(parse_range("a:b:c").is_err());
    }
}
