//! Double Butcher tableaux for IMEX Runge–Kutta time stepping.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

const TABLEAU_TOL: f64 = 1e-14;

/// Explicit part `(Ã, b̃, c̃)` and implicit part `(A, b, c)` of an IMEX-RK scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleTableau {
    pub a_exp: Vec<Vec<f64>>,
    pub a_imp: Vec<Vec<f64>>,
    pub b_exp: Vec<f64>,
    pub b_imp: Vec<f64>,
    pub c_exp: Vec<f64>,
    pub c_imp: Vec<f64>,
}

impl DoubleTableau {
    pub fn stages(&self) -> usize {
        self.b_imp.len()
    }

    /// Implicit row `i` is identically zero: the stage is the time-`t_n` state.
    pub fn is_trivial_stage(&self, i: usize) -> bool {
        self.a_imp[i].iter().all(|&a| a == 0.0) && self.a_exp[i].iter().all(|&a| a == 0.0)
    }
}

/// ARS(1,1,1): forward/backward Euler in two-stage CK-ARS form.
pub fn ars111() -> DoubleTableau {
    DoubleTableau {
        a_exp: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        a_imp: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        b_exp: vec![1.0, 0.0],
        b_imp: vec![0.0, 1.0],
        c_exp: vec![0.0, 1.0],
        c_imp: vec![0.0, 1.0],
    }
}

/// ARS(2,2,2) with `γ = 1 − 1/√2`, `δ = 1 − 1/(2γ)`.
pub fn ars222() -> DoubleTableau {
    let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let d = 1.0 - 1.0 / (2.0 * g);
    DoubleTableau {
        a_exp: vec![
            vec![0.0, 0.0, 0.0],
            vec![g, 0.0, 0.0],
            vec![d, 1.0 - d, 0.0],
        ],
        a_imp: vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, g, 0.0],
            vec![0.0, 1.0 - g, g],
        ],
        b_exp: vec![d, 1.0 - d, 0.0],
        b_imp: vec![0.0, 1.0 - g, g],
        c_exp: vec![0.0, g, 1.0],
        c_imp: vec![0.0, g, 1.0],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableauViolation {
    Shape(String),
    ExplicitNotStrictlyLower { row: usize, col: usize },
    ImplicitNotLower { row: usize, col: usize },
    ZeroImplicitDiagonal { row: usize },
    ExplicitAbscissa { row: usize },
    ImplicitAbscissa { row: usize },
    NotGloballyStifflyAccurate(String),
}

impl fmt::Display for TableauViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shape(msg) => write!(f, "shape: {msg}"),
            Self::ExplicitNotStrictlyLower { row, col } => {
                write!(
                    f,
                    "explicit matrix not strictly lower triangular at ({row}, {col})"
                )
            }
            Self::ImplicitNotLower { row, col } => {
                write!(f, "implicit matrix not lower triangular at ({row}, {col})")
            }
            Self::ZeroImplicitDiagonal { row } => {
                write!(f, "implicit diagonal vanishes on non-trivial row {row}")
            }
            Self::ExplicitAbscissa { row } => write!(f, "c̃_{row} ≠ Σ_j ã_{row}j"),
            Self::ImplicitAbscissa { row } => write!(f, "c_{row} ≠ Σ_j a_{row}j"),
            Self::NotGloballyStifflyAccurate(msg) => write!(f, "GSA violated: {msg}"),
        }
    }
}

/// Check every structural property the stepper relies on. An empty list means pass.
pub fn validate_tableau(t: &DoubleTableau) -> Vec<TableauViolation> {
    let s = t.b_imp.len();
    let mut out = Vec::new();
    let square = |m: &Vec<Vec<f64>>| m.len() == s && m.iter().all(|r| r.len() == s);
    if s == 0
        || !square(&t.a_exp)
        || !square(&t.a_imp)
        || t.b_exp.len() != s
        || t.c_exp.len() != s
        || t.c_imp.len() != s
    {
        out.push(TableauViolation::Shape(format!(
            "inconsistent sizes for s = {s}"
        )));
        return out;
    }

    for i in 0..s {
        for j in i..s {
            if t.a_exp[i][j] != 0.0 {
                out.push(TableauViolation::ExplicitNotStrictlyLower { row: i, col: j });
            }
            if j > i && t.a_imp[i][j] != 0.0 {
                out.push(TableauViolation::ImplicitNotLower { row: i, col: j });
            }
        }
        let row_nonzero = t.a_imp[i].iter().any(|&a| a != 0.0);
        if row_nonzero && t.a_imp[i][i] == 0.0 {
            out.push(TableauViolation::ZeroImplicitDiagonal { row: i });
        }
        if (t.c_exp[i] - t.a_exp[i].iter().sum::<f64>()).abs() > TABLEAU_TOL {
            out.push(TableauViolation::ExplicitAbscissa { row: i });
        }
        if (t.c_imp[i] - t.a_imp[i].iter().sum::<f64>()).abs() > TABLEAU_TOL {
            out.push(TableauViolation::ImplicitAbscissa { row: i });
        }
    }

    let last = s - 1;
    if (t.c_imp[last] - 1.0).abs() > TABLEAU_TOL || (t.c_exp[last] - 1.0).abs() > TABLEAU_TOL {
        out.push(TableauViolation::NotGloballyStifflyAccurate(
            "c_s or c̃_s ≠ 1".into(),
        ));
    }
    for j in 0..s {
        if (t.a_imp[last][j] - t.b_imp[j]).abs() > TABLEAU_TOL {
            out.push(TableauViolation::NotGloballyStifflyAccurate(format!(
                "a_s{j} ≠ b_{j}"
            )));
        }
        if (t.a_exp[last][j] - t.b_exp[j]).abs() > TABLEAU_TOL {
            out.push(TableauViolation::NotGloballyStifflyAccurate(format!(
                "ã_s{j} ≠ b̃_{j}"
            )));
        }
    }
    out
}

/// CLI-visible scheme names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Ars111,
    Ars222,
}

impl Scheme {
    pub fn tableau(self) -> DoubleTableau {
        match self {
            Scheme::Ars111 => ars111(),
            Scheme::Ars222 => ars222(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ars111 => "ars111",
            Scheme::Ars222 => "ars222",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ars111" => Ok(Scheme::Ars111),
            "ars222" => Ok(Scheme::Ars222),
            _ => Err(Error::UnknownName {
                kind: "scheme",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
