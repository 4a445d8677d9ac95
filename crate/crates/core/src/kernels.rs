//! Pair kernels h(x, y) and scalar kernels g(x) evaluated on scaled
//! spacings.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// |x - y|^r, the family driving the second-order statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GiniKernel {
    r: f64,
}

impl GiniKernel {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonpositiveExponent { exponent: r });
        }
        Ok(Self { r })
    }

    pub fn exponent(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        // powf costs ~10x an add; the exponents the power study sweeps get
        // exact fast paths.
        if self.r == 2.0 {
            d * d
        } else if self.r == 1.0 {
            d
        } else if self.r == 1.5 {
            d * d.sqrt()
        } else {
            d.powf(self.r)
        }
    }
}

type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum PairForm {
    Gini(GiniKernel),
    Symmetrized(ScalarKernel),
    Custom(PairFn),
}

/// A symmetric kernel of two spacing arguments.
#[derive(Clone)]
pub struct SymmetricKernel {
    label: String,
    form: PairForm,
}

impl SymmetricKernel {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.form {
            PairForm::Gini(g) => g.eval(x, y),
            PairForm::Symmetrized(g) => 0.5 * (g.eval(x) + g.eval(y)),
            PairForm::Custom(f) => f(x, y),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The exponent when this is a |x-y|^r kernel.
    pub fn gini_exponent(&self) -> Option<f64> {
        match &self.form {
            PairForm::Gini(g) => Some(g.exponent()),
            _ => None,
        }
    }

    /// Closed-form null moments exist only for the squared-difference
    /// kernel |x-y|^2.
    pub fn has_analytic_moments(&self) -> bool {
        self.gini_exponent() == Some(2.0)
    }

    /// Wrap an arbitrary symmetric closure. The caller is responsible for
    /// actual symmetry; property tests enforce it for the built-ins.
    pub fn custom(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            form: PairForm::Custom(Arc::new(f)),
        }
    }
}

impl fmt::Debug for SymmetricKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricKernel").field("label", &self.label).finish()
    }
}

/// Build |x - y|^r with the label `gini:r=<r>`.
pub fn make_gini(r: f64) -> Result<SymmetricKernel> {
    let g = GiniKernel::new(r)?;
    Ok(SymmetricKernel {
        label: format!("gini:r={r}"),
        form: PairForm::Gini(g),
    })
}

#[derive(Clone)]
enum ScalarForm {
    Power(f64),
    Custom(ScalarFn),
}

/// A kernel of one spacing argument, for first-order statistics.
#[derive(Clone)]
pub struct ScalarKernel {
    label: String,
    form: ScalarForm,
}

impl ScalarKernel {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.form {
            ScalarForm::Power(s) => {
                if *s == 2.0 {
                    x * x
                } else if *s == 1.0 {
                    x
                } else {
                    x.powf(*s)
                }
            }
            ScalarForm::Custom(f) => f(x),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            form: ScalarForm::Custom(Arc::new(f)),
        }
    }
}

impl fmt::Debug for ScalarKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarKernel").field("label", &self.label).finish()
    }
}

/// Build x^s with the label `pow:s=<s>`.
pub fn make_power_scalar(s: f64) -> Result<ScalarKernel> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::NonpositiveExponent { exponent: s });
    }
    Ok(ScalarKernel {
        label: format!("pow:s={s}"),
        form: ScalarForm::Power(s),
    })
}

/// Lift a scalar kernel to the symmetric pair kernel (g(x) + g(y)) / 2.
pub fn symmetrize(g: ScalarKernel) -> SymmetricKernel {
    SymmetricKernel {
        label: format!("sym({})", g.label),
        form: PairForm::Symmetrized(g),
    }
}

// ---------------------------------------------------------------------------
// CLI-facing kernel names

/// The kernels reachable from the command line and the power study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelSpec {
    /// `gini:r=<r>`, a second-order statistic.
    Gini { r: f64 },
    /// `greenwood`: first-order statistic with g(x) = x^2.
    Greenwood,
    /// `symsq`: second-order statistic with the symmetrized square.
    SymSq,
}

impl KernelSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::UnsupportedFamily {
            spec: format!("kernel `{s}` (expected gini:r=<r>, greenwood or symsq)"),
        };
        if s == "greenwood" {
            return Ok(KernelSpec::Greenwood);
        }
        if s == "symsq" {
            return Ok(KernelSpec::SymSq);
        }
        let rest = s.strip_prefix("gini:r=").ok_or_else(bad)?;
        let r: f64 = rest.parse().ok().ok_or_else(bad)?;
        GiniKernel::new(r)?;
        Ok(KernelSpec::Gini { r })
    }

    /// Label matching what the built kernel reports.
    pub fn label(&self) -> String {
        match self {
            KernelSpec::Gini { r } => format!("gini:r={r}"),
            KernelSpec::Greenwood => "greenwood".into(),
            KernelSpec::SymSq => "symsq".into(),
        }
    }

    /// Greenwood is the only first-order statistic in the set.
    pub fn is_first_order(&self) -> bool {
        matches!(self, KernelSpec::Greenwood)
    }
}

impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelSpec::parse(s)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

// ---------------------------------------------------------------------------
