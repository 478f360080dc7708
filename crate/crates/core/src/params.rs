//! Physical and dimensionless parameter records, nondimensionalization and
//! the plain-text key=value parameter file format.

use crate::error::{Result, RodError};

/// Physical parameters of a linearly elastic conducting rod together with
/// the loading constants that label an equilibrium family.
///
/// The inextensible/unshearable limit is stored as vanishing compliance
/// (`h_inv = j_inv = k_inv = 0`) rather than infinite stiffness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodParameters {
    /// Principal bending stiffnesses about d₁ and d₂ (force·length²).
    pub b1: f64,
    pub b2: f64,
    /// Torsional stiffness about d₃ (force·length²).
    pub c: f64,
    /// Transverse shear compliances 1/H, 1/J and axial compliance 1/K
    /// (1/force); zero means rigid in that mode.
    pub h_inv: f64,
    pub j_inv: f64,
    pub k_inv: f64,
    /// Current–field product λ = I·B̄ (force/length).
    pub lambda: f64,
    /// Casimir values C₁ (force²) and C₂ (force).
    pub c1: f64,
    pub c2: f64,
    /// Twisting moment p_φ = m₃ (force·length).
    pub m3: f64,
}

impl RodParameters {
    /// Elastic rod given stiffnesses H, J, K (may be `f64::INFINITY` for a
    /// rigid mode).
    #[allow(clippy::too_many_arguments)]
    pub fn elastic(
        b1: f64,
        b2: f64,
        c: f64,
        h: f64,
        j: f64,
        k: f64,
        lambda: f64,
        c1: f64,
        c2: f64,
        m3: f64,
    ) -> Result<Self> {
        let p = Self {
            b1,
            b2,
            c,
            h_inv: recip_stiffness(h, "H")?,
            j_inv: recip_stiffness(j, "J")?,
            k_inv: recip_stiffness(k, "K")?,
            lambda,
            c1,
            c2,
            m3,
        };
        p.validate()?;
        Ok(p)
    }

    /// Isotropic elastic rod: B₁ = B₂ = b, H = J = hj.
    #[allow(clippy::too_many_arguments)]
    pub fn isotropic_elastic(b: f64, c: f64, hj: f64, k: f64, lambda: f64, c1: f64, c2: f64, m3: f64) -> Self {
        Self::elastic(b, b, c, hj, hj, k, lambda, c1, c2, m3).expect("valid isotropic parameters")
    }

    /// Isotropic inextensible/unshearable rod (vanishing compliance).
    pub fn isotropic_rigid(b: f64, c: f64, lambda: f64, c1: f64, c2: f64, m3: f64) -> Self {
        let p = Self {
            b1: b,
            b2: b,
            c,
            h_inv: 0.0,
            j_inv: 0.0,
            k_inv: 0.0,
            lambda,
            c1,
            c2,
            m3,
        };
        p.validate().expect("valid rigid parameters");
        p
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("B1", self.b1), ("B2", self.b2), ("C", self.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(RodError::InvalidParameter(format!("{name} must be strictly positive, got {v}")));
            }
        }
        for (name, v) in [("1/H", self.h_inv), ("1/J", self.j_inv), ("1/K", self.k_inv)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(RodError::InvalidParameter(format!("{name} must be a finite compliance >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Shear stiffness H (infinite when rigid).
    pub fn h(&self) -> f64 {
        if self.h_inv == 0.0 { f64::INFINITY } else { 1.0 / self.h_inv }
    }

    pub fn j(&self) -> f64 {
        if self.j_inv == 0.0 { f64::INFINITY } else { 1.0 / self.j_inv }
    }

    pub fn k(&self) -> f64 {
        if self.k_inv == 0.0 { f64::INFINITY } else { 1.0 / self.k_inv }
    }

    pub fn is_isotropic(&self) -> bool {
        self.b1 == self.b2 && self.h_inv == self.j_inv
    }

    /// True in the inextensible/unshearable limit.
    pub fn is_rigid(&self) -> bool {
        self.h_inv == 0.0 && self.j_inv == 0.0 && self.k_inv == 0.0
    }

    /// Dimensionless parameter set of the isotropic rod. The scaled
    /// arclength is t = s·m₃/B.
    pub fn nondimensionalize(&self) -> Result<DimensionlessParameters> {
        if !self.is_isotropic() {
            return Err(RodError::Anisotropic);
        }
        if self.c2 == 0.0 {
            return Err(RodError::InvalidParameter("C2 must be nonzero".into()));
        }
        if self.m3 == 0.0 {
            return Err(RodError::InvalidParameter("m3 must be nonzero".into()));
        }
        let b = self.b1;
        Ok(DimensionlessParameters {
            m: self.m3 / (b * self.c2).sqrt(),
            gamma: self.c2 * (self.k_inv - self.j_inv),
            delta: self.c2 * self.j_inv,
            lambda_bar: self.lambda * self.m3 / (self.c2 * self.c2),
            mu: (2.0 * self.c1 - self.c2 * self.c2) / (self.c2 * self.c2),
        })
    }
}

fn recip_stiffness(v: f64, name: &str) -> Result<f64> {
    if v == f64::INFINITY {
        Ok(0.0)
    } else if v > 0.0 && v.is_finite() {
        Ok(1.0 / v)
    } else {
        Err(RodError::InvalidParameter(format!("{name} must be strictly positive or inf, got {v}")))
    }
}

/// Dimensionless parameters (m, γ, δ, λ̄, μ) of the reduced isotropic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParameters {
    pub m: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda_bar: f64,
    pub mu: f64,
}

impl DimensionlessParameters {
    pub fn new(m: f64, gamma: f64, delta: f64, lambda_bar: f64, mu: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(RodError::InvalidParameter(format!("m must be positive, got {m}")));
        }
        if gamma < 0.0 || delta < 0.0 {
            return Err(RodError::InvalidParameter("gamma and delta must be nonnegative".into()));
        }
        Ok(Self { m, gamma, delta, lambda_bar, mu })
    }

    /// Physical parameters in the gauge B = C = C₂ = 1 that reproduce this
    /// dimensionless set; then m₃ = m, λ = λ̄/m, C₁ = (μ+1)/2 and the time
    /// scale coincides with t = s·m.
    pub fn standard_gauge(&self) -> RodParameters {
        RodParameters {
            b1: 1.0,
            b2: 1.0,
            c: 1.0,
            h_inv: self.delta,
            j_inv: self.delta,
            k_inv: self.gamma + self.delta,
            lambda: self.lambda_bar / self.m,
            c1: 0.5 * (self.mu + 1.0),
            c2: 1.0,
            m3: self.m,
        }
    }
}

/// Either form a parameter file may carry.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterSet {
    Physical(RodParameters),
    Dimensionless(DimensionlessParameters),
}

const PHYSICAL_KEYS: [&str; 10] = ["B1", "B2", "C", "H", "J", "K", "lambda", "C1", "C2", "m3"];
const DIMENSIONLESS_KEYS: [&str; 5] = ["m", "gamma", "delta", "lambda_bar", "mu"];

/// Parses the plain-text key=value parameter format. Exactly one of the two
/// key sets must be present in full; unknown keys are rejected.
pub fn parse_parameter_file(text: &str) -> Result<ParameterSet> {
    let mut seen: Vec<(String, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| RodError::Parse(format!("line {}: expected key=value, got {raw:?}", lineno + 1)))?;
        let key = key.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| RodError::Parse(format!("line {}: bad number {:?}", lineno + 1, value.trim())))?;
        if !PHYSICAL_KEYS.contains(&key) && !DIMENSIONLESS_KEYS.contains(&key) {
            return Err(RodError::Parse(format!("unknown key {key:?}")));
        }
        if seen.iter().any(|(k, _)| k == key) {
            return Err(RodError::Parse(format!("duplicate key {key:?}")));
        }
        seen.push((key.to_string(), value));
    }

    let has = |k: &str| seen.iter().find(|(key, _)| key == k).map(|(_, v)| *v);
    let physical = PHYSICAL_KEYS.iter().filter(|k| has(k).is_some()).count();
    let dimensionless = DIMENSIONLESS_KEYS.iter().filter(|k| has(k).is_some()).count();

    if physical > 0 && dimensionless > 0 {
        return Err(RodError::Parse("cannot mix physical and dimensionless keys".into()));
    }
    if physical == PHYSICAL_KEYS.len() {
        let get = |k: &str| has(k).unwrap();
        Ok(ParameterSet::Physical(RodParameters::elastic(
            get("B1"),
            get("B2"),
            get("C"),
            get("H"),
            get("J"),
            get("K"),
            get("lambda"),
            get("C1"),
            get("C2"),
            get("m3"),
        )?))
    } else if dimensionless == DIMENSIONLESS_KEYS.len() {
        let get = |k: &str| has(k).unwrap();
        Ok(ParameterSet::Dimensionless(DimensionlessParameters::new(
            get("m"),
            get("gamma"),
            get("delta"),
            get("lambda_bar"),
            get("mu"),
        )?))
    } else {
        Err(RodError::Parse("incomplete parameter set".into()))
    }
}

/// Serializes a parameter set back to the key=value format, keys in
/// canonical order.
pub fn write_parameter_file(set: &ParameterSet) -> String {
    let mut out = String::new();
    match set {
        ParameterSet::Physical(p) => {
            let vals = [
                p.b1,
                p.b2,
                p.c,
                p.h(),
                p.j(),
                p.k(),
                p.lambda,
                p.c1,
                p.c2,
                p.m3,
            ];
            for (k, v) in PHYSICAL_KEYS.iter().zip(vals) {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        ParameterSet::Dimensionless(d) => {
            let vals = [d.m, d.gamma, d.delta, d.lambda_bar, d.mu];
            for (k, v) in DIMENSIONLESS_KEYS.iter().zip(vals) {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
    }
    out
}
