//! Closed formulas, bound checks and the formula-versus-oracle report.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{BiLaurent, Window};
use crate::bundle::{u_multiplicity, BundleV, ExtensionClass, Multiplicity};
use crate::cech::{self, CechError};
use crate::dirimg::{self, CapSchedule, DirImgError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantsError {
    #[error("m = {m} outside 1..={} for j = {j}", (2 * *j).saturating_sub(2))]
    Domain { j: u32, m: u32 },
    #[error("cross-check mismatch for {}: {}", .report.class, .mismatches.join("; "))]
    CrossCheckMismatch {
        report: Box<InvariantReport>,
        mismatches: Vec<String>,
    },
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    DirImg(#[from] DirImgError),
}

impl InvariantsError {
    pub fn is_non_stabilized(&self) -> bool {
        matches!(
            self,
            InvariantsError::Cech(
                CechError::NonStabilized { .. } | CechError::WindowTooSmall { .. }
            ) | InvariantsError::DirImg(DirImgError::NonStabilized { .. })
        )
    }
}

/// `a choose 2`, zero for `a < 2`.
pub fn choose2(a: i64) -> u64 {
    if a < 2 {
        0
    } else {
        (a * (a - 1) / 2) as u64
    }
}

/// `C(j, 2) - C(j - m, 2)`; the split class gives `C(j, 2)`.
pub fn r1_formula(j: u32, m: Multiplicity) -> u64 {
    let j = j as i64;
    match m {
        Multiplicity::Split => choose2(j),
        Multiplicity::Finite(m) => choose2(j) - choose2(j - m as i64),
    }
}

/// `m (2j - (m + 1) / 2)` for `1 <= m <= 2j - 2`.
pub fn moduli_dim_formula(j: u32, m: u32) -> Result<u64, InvariantsError> {
    if m < 1 || m + 2 > 2 * j {
        return Err(InvariantsError::Domain { j, m });
    }
    let (j, m) = (j as u64, m as u64);
    Ok(2 * j * m - m * (m + 1) / 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fatal,
    PaperClaimed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: u64,
    pub lower: Option<u64>,
    pub upper: Option<u64>,
    pub ok: bool,
    pub severity: Severity,
}

impl BoundCheck {
    fn new(value: u64, lower: Option<u64>, upper: Option<u64>, severity: Severity) -> Self {
        let ok = lower.is_none_or(|l| l <= value) && upper.is_none_or(|u| value <= u);
        BoundCheck {
            value,
            lower,
            upper,
            ok,
            severity,
        }
    }
}

/// One flag per bound. The lower bound on `l(Q)` is kept apart because it
/// is only claimed, never fatal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsVerdict {
    #[serde(rename = "lR1")]
    pub lr1: BoundCheck,
    #[serde(rename = "lQ")]
    pub lq: BoundCheck,
    #[serde(rename = "lQ_lower")]
    pub lq_lower: BoundCheck,
    pub charge: BoundCheck,
}

impl BoundsVerdict {
    pub fn checks(&self) -> [(&'static str, &BoundCheck); 4] {
        [
            ("lR1", &self.lr1),
            ("lQ", &self.lq),
            ("lQ_lower", &self.lq_lower),
            ("charge", &self.charge),
        ]
    }

    /// No fatal bound is violated.
    pub fn fatal_ok(&self) -> bool {
        self.checks()
            .iter()
            .all(|(_, c)| c.ok || c.severity != Severity::Fatal)
    }

    pub fn all_ok(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.ok)
    }
}

/// Bounds on `l(R^1)`, `l(Q)` and the charge for splitting type `j`; all
/// three vanish for `j = 0`.
pub fn bounds_check(j: u32, lr1: u64, lq: u64, c: u64) -> BoundsVerdict {
    use Severity::*;
    let jj = j as i64;
    if j == 0 {
        let zero = |v| BoundCheck::new(v, Some(0), Some(0), Fatal);
        return BoundsVerdict {
            lr1: zero(lr1),
            lq: zero(lq),
            lq_lower: BoundCheck::new(lq, Some(0), None, PaperClaimed),
            charge: zero(c),
        };
    }
    let j64 = j as u64;
    BoundsVerdict {
        lr1: BoundCheck::new(lr1, Some(j64 - 1), Some(choose2(jj)), Fatal),
        lq: BoundCheck::new(lq, None, Some(choose2(jj + 1)), Fatal),
        lq_lower: BoundCheck::new(lq, Some(1), None, PaperClaimed),
        charge: BoundCheck::new(c, Some(j64), Some(j64 * j64), Fatal),
    }
}

/// Everything known about one bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantReport {
    pub class: ExtensionClass,
    pub m: Multiplicity,
    pub lr1_formula: u64,
    pub lr1_oracle: u64,
    pub lq_oracle: u64,
    pub charge: u64,
    /// `None` where the closed formula is not defined (split classes).
    pub h1end_formula: Option<u64>,
    pub h1end_oracle: u64,
    pub bounds: BoundsVerdict,
    pub stabilized: bool,
    /// Windows tried for `H^1(V)`, ending with the pair that agreed.
    pub windows: Vec<Window>,
    pub end_windows: Vec<Window>,
    pub degree_cap: u32,
    pub r1_representatives: Vec<Vec<BiLaurent>>,
}

impl InvariantReport {
    pub fn j(&self) -> u32 {
        self.class.j()
    }

    /// `(w, h) = (l(Q), l(R^1))`.
    pub fn cell(&self) -> (u64, u64) {
        (self.lq_oracle, self.lr1_oracle)
    }

    /// Every disagreement between formula and oracle, and every violated
    /// fatal bound.
    pub fn mismatches(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lr1_formula != self.lr1_oracle {
            out.push(format!(
                "lR1 formula {} != oracle {}",
                self.lr1_formula, self.lr1_oracle
            ));
        }
        if let Some(f) = self.h1end_formula {
            if f != self.h1end_oracle {
                out.push(format!("h1End formula {f} != oracle {}", self.h1end_oracle));
            }
        }
        for (name, c) in self.bounds.checks() {
            if !c.ok && c.severity == Severity::Fatal {
                out.push(format!(
                    "{name} = {} outside [{:?}, {:?}]",
                    c.value, c.lower, c.upper
                ));
            }
        }
        out
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h1f = self
            .h1end_formula
            .map_or_else(|| "-".to_string(), |v| v.to_string());
        writeln!(f, "j        {}", self.j())?;
        writeln!(f, "p        {}", self.class.p())?;
        writeln!(f, "m        {}", self.m)?;
        writeln!(
            f,
            "lR1      oracle {}  formula {}",
            self.lr1_oracle, self.lr1_formula
        )?;
        writeln!(f, "lQ       {}", self.lq_oracle)?;
        writeln!(f, "charge   {}", self.charge)?;
        writeln!(f, "h1End    oracle {}  formula {}", self.h1end_oracle, h1f)?;
        let flags: Vec<String> = self
            .bounds
            .checks()
            .iter()
            .map(|(n, c)| format!("{n}={}", if c.ok { "ok" } else { "FAIL" }))
            .collect();
        write!(f, "bounds   {}", flags.join(" "))
    }
}

/// Overrides for the stabilization schedules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    pub window: Option<Window>,
    pub degree_cap: Option<u32>,
}

/// Runs every oracle and formula without judging the outcome.
pub fn compute_report(
    b: &BundleV,
    opts: ReportOptions,
) -> Result<InvariantReport, InvariantsError> {
    let j = b.j();
    let m = u_multiplicity(b.p());
    let lr1_formula = r1_formula(j, m);
    let h1end_formula = match m {
        Multiplicity::Finite(m) => Some(moduli_dim_formula(j, m)?),
        Multiplicity::Split => None,
    };
    if j == 0 {
        let w = cech::default_window(0);
        return Ok(InvariantReport {
            class: b.ext().clone(),
            m,
            lr1_formula,
            lr1_oracle: 0,
            lq_oracle: 0,
            charge: 0,
            h1end_formula,
            h1end_oracle: 0,
            bounds: bounds_check(0, 0, 0, 0),
            stabilized: true,
            windows: vec![w],
            end_windows: vec![w],
            degree_cap: dirimg::default_cap(0),
            r1_representatives: Vec::new(),
        });
    }
    let start = opts.window.unwrap_or_else(|| cech::default_window(j));
    let policy = cech::Enlargement::default();
    let r1 = cech::stabilized_h1(b.transition(), start, policy)?;
    let end = cech::stabilized_h1(&crate::bundle::end_transition(b).t_end, start, policy)?;
    let lq = dirimg::lq_detail(b, opts.degree_cap, CapSchedule::default())?;
    let lr1_oracle = r1.result.dim as u64;
    let lq_oracle = lq.lq as u64;
    let charge = lr1_oracle + lq_oracle;
    Ok(InvariantReport {
        class: b.ext().clone(),
        m,
        lr1_formula,
        lr1_oracle,
        lq_oracle,
        charge,
        h1end_formula,
        h1end_oracle: end.result.dim as u64,
        bounds: bounds_check(j, lr1_oracle, lq_oracle, charge),
        stabilized: r1.result.stabilized && end.result.stabilized,
        windows: r1.windows,
        end_windows: end.windows,
        degree_cap: lq.degree_cap,
        r1_representatives: r1.result.representatives,
    })
}

/// [`compute_report`] followed by the cross-check; any mismatch is an error
/// that still carries the full report.
pub fn report_with(b: &BundleV, opts: ReportOptions) -> Result<InvariantReport, InvariantsError> {
    let report = compute_report(b, opts)?;
    let mismatches = report.mismatches();
    if mismatches.is_empty() {
        Ok(report)
    } else {
        Err(InvariantsError::CrossCheckMismatch {
            report: Box::new(report),
            mismatches,
        })
    }
}

pub fn report(b: &BundleV) -> Result<InvariantReport, InvariantsError> {
    report_with(b, ReportOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_polynomial;
    use crate::bundle::make_bundle;

    fn bundle(j: u32, q: &str) -> BundleV {
        make_bundle(j, parse_polynomial(q).unwrap()).unwrap()
    }

    #[test]
    fn r1_formula_values() {
        assert_eq!(r1_formula(4, Multiplicity::Finite(1)), 3);
        assert_eq!(r1_formula(3, Multiplicity::Finite(2)), 3);
        assert_eq!(r1_formula(0, Multiplicity::Split), 0);
        assert_eq!(r1_formula(4, Multiplicity::Split), 6);
        assert_eq!(r1_formula(3, Multiplicity::Finite(4)), 3);
    }

    #[test]
    fn moduli_formula_values() {
        assert_eq!(moduli_dim_formula(2, 1).unwrap(), 3);
        assert_eq!(moduli_dim_formula(2, 2).unwrap(), 5);
        assert_eq!(moduli_dim_formula(3, 1).unwrap(), 5);
        assert_eq!(
            moduli_dim_formula(2, 3),
            Err(InvariantsError::Domain { j: 2, m: 3 })
        );
        assert!(moduli_dim_formula(1, 1).is_err());
        assert!(moduli_dim_formula(3, 0).is_err());
    }

    #[test]
    fn bound_verdicts() {
        assert!(bounds_check(2, 1, 3, 4).all_ok());
        assert!(bounds_check(2, 1, 1, 2).all_ok());
        let v = bounds_check(2, 0, 1, 1);
        assert!(!v.lr1.ok);
        assert!(!v.fatal_ok());
        let v = bounds_check(2, 1, 0, 1);
        assert!(!v.lq_lower.ok);
        assert_eq!(v.lq_lower.severity, Severity::PaperClaimed);
        assert!(v.lq.ok);
        assert!(bounds_check(0, 0, 0, 0).all_ok());
    }

    #[test]
    fn trivial_and_split_reports() {
        let r = report(&bundle(0, "0")).unwrap();
        assert_eq!(
            (r.lr1_oracle, r.lq_oracle, r.charge, r.h1end_oracle),
            (0, 0, 0, 0)
        );
        let r = report(&bundle(1, "0")).unwrap();
        assert_eq!((r.lr1_oracle, r.lq_oracle, r.charge), (0, 1, 1));
        for j in 1..=3u32 {
            let r = report(&bundle(j, "0")).unwrap();
            assert_eq!(r.charge, (j * j) as u64);
            assert_eq!(r.h1end_formula, None);
        }
    }

    #[test]
    fn mismatch_carries_report() {
        match report(&bundle(2, "u")) {
            Err(InvariantsError::CrossCheckMismatch { report, mismatches }) => {
                assert_eq!(report.h1end_oracle, 4);
                assert_eq!(report.h1end_formula, Some(3));
                assert_eq!(mismatches.len(), 1);
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn matching_class_passes() {
        let r = report(&bundle(2, "z*u^2")).unwrap();
        assert_eq!((r.lr1_oracle, r.lq_oracle, r.h1end_oracle), (1, 2, 5));
        assert!(r.stabilized);
    }
}
