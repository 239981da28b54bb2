//! Sign, zero and narrative restriction sets.
//!
//! Indices are 0-based: variables and shocks in `0..N`, horizons from 0
//! (impact), periods as rows of the effective sample.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    /// Decode the `-1`, `0`, `1` convention.
    pub fn from_code(code: i64) -> Result<Sign> {
        match code {
            -1 => Ok(Sign::Negative),
            0 => Ok(Sign::Zero),
            1 => Ok(Sign::Positive),
            other => Err(Error::InvalidRestriction(format!("sign code {other} is not one of -1, 0, 1"))),
        }
    }

    pub fn code(self) -> i64 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    /// Strict inequality check of `value` (zero codes always hold here;
    /// they are imposed by construction).
    pub fn holds(self, value: f64) -> bool {
        match self {
            Sign::Negative => value < 0.0,
            Sign::Positive => value > 0.0,
            Sign::Zero => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NarrativeKind {
    /// The shock has the given sign in every period of the window.
    ShockSign,
    /// The shock contributes more to the variable than any other shock.
    MostImportant,
    /// The shock contributes less to the variable than any other shock.
    LeastImportant,
    /// The shock contributes more than all other shocks combined.
    Overwhelming,
    /// The shock contributes less than all other shocks combined.
    Negligible,
}

impl NarrativeKind {
    pub fn parse(name: &str) -> Result<NarrativeKind> {
        match name {
            "shock-sign" => Ok(NarrativeKind::ShockSign),
            "hd-most-important" => Ok(NarrativeKind::MostImportant),
            "hd-least-important" => Ok(NarrativeKind::LeastImportant),
            "hd-overwhelming" => Ok(NarrativeKind::Overwhelming),
            "hd-negligible" => Ok(NarrativeKind::Negligible),
            other => Err(Error::InvalidRestriction(format!(
                "unknown narrative kind {other:?}; expected shock-sign, hd-most-important, hd-least-important, hd-overwhelming or hd-negligible"
            ))),
        }
    }

    pub fn uses_decomposition(self) -> bool {
        self != NarrativeKind::ShockSign
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NarrativeRestriction {
    pub kind: NarrativeKind,
    /// `1` or `-1`; only read by [`NarrativeKind::ShockSign`].
    pub sign: i8,
    pub shock: usize,
    /// Only read by the decomposition kinds.
    pub variable: usize,
    /// First restricted row of the effective sample.
    pub start: usize,
    pub length: usize,
}

impl NarrativeRestriction {
    pub fn shock_sign(shock: usize, sign: i8, start: usize, length: usize) -> Self {
        NarrativeRestriction { kind: NarrativeKind::ShockSign, sign, shock, variable: 0, start, length }
    }

    pub fn decomposition(kind: NarrativeKind, variable: usize, shock: usize, start: usize, length: usize) -> Self {
        NarrativeRestriction { kind, sign: 1, shock, variable, start, length }
    }

    pub fn periods(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.length
    }

    pub fn validate(&self, n: usize, t_eff: usize) -> Result<()> {
        if self.shock >= n || self.variable >= n {
            return Err(Error::InvalidRestriction(format!(
                "narrative restriction refers to shock {} / variable {} with N = {n}",
                self.shock + 1,
                self.variable + 1
            )));
        }
        if self.length == 0 || self.start + self.length > t_eff {
            return Err(Error::InvalidRestriction(format!(
                "narrative window of {} periods starting at effective period {} exceeds the {} available",
                self.length,
                self.start + 1,
                t_eff
            )));
        }
        if self.kind == NarrativeKind::ShockSign && self.sign != 1 && self.sign != -1 {
            return Err(Error::InvalidRestriction(format!("narrative sign {} is not 1 or -1", self.sign)));
        }
        Ok(())
    }
}

/// Sign and zero codes on impulse responses, sign codes on the structural
/// matrix, and narrative restrictions.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSet {
    n: usize,
    /// `horizons` slices of `N x N` codes, variable-major within a slice.
    irf: Vec<Option<Sign>>,
    horizons: usize,
    /// Rows are shocks, columns variables.
    structural: Vec<Option<Sign>>,
    narrative: Vec<NarrativeRestriction>,
}

impl RestrictionSet {
    /// All codes unset, one horizon.
    pub fn new(n: usize) -> Self {
        RestrictionSet { n, irf: vec![None; n * n], horizons: 1, structural: vec![None; n * n], narrative: Vec::new() }
    }

    /// Dense codes per horizon with `NaN` as unset. A single slice covers the
    /// impact horizon only.
    pub fn from_dense(slices: &[nalgebra::DMatrix<f64>]) -> Result<Self> {
        let n = slices.first().map_or(0, |m| m.nrows());
        let mut set = RestrictionSet::new(n);
        for (h, m) in slices.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidRestriction(format!(
                    "horizon {h} slice is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    let v = m[(i, j)];
                    if v.is_nan() {
                        continue;
                    }
                    if v.fract() != 0.0 {
                        return Err(Error::InvalidRestriction(format!("sign code {v} is not one of -1, 0, 1")));
                    }
                    set.set_irf(i, j, h, Sign::from_code(v as i64)?)?;
                }
            }
        }
        Ok(set)
    }

    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn horizons(&self) -> usize {
        self.horizons
    }

    fn irf_index(&self, variable: usize, shock: usize, horizon: usize) -> usize {
        (horizon * self.n + shock) * self.n + variable
    }

    pub fn set_irf(&mut self, variable: usize, shock: usize, horizon: usize, sign: Sign) -> Result<()> {
        if variable >= self.n || shock >= self.n {
            return Err(Error::InvalidRestriction(format!(
                "response of variable {} to shock {} is out of range for N = {}",
                variable + 1,
                shock + 1,
                self.n
            )));
        }
        if horizon >= self.horizons {
            self.irf.resize((horizon + 1) * self.n * self.n, None);
            self.horizons = horizon + 1;
        }
        let idx = self.irf_index(variable, shock, horizon);
        match self.irf[idx] {
            Some(existing) if existing != sign => Err(Error::InvalidRestriction(format!(
                "conflicting codes for variable {}, shock {}, horizon {horizon}",
                variable + 1,
                shock + 1
            ))),
            _ => {
                self.irf[idx] = Some(sign);
                Ok(())
            }
        }
    }

    pub fn set_structural(&mut self, shock: usize, variable: usize, sign: Sign) -> Result<()> {
        if variable >= self.n || shock >= self.n {
            return Err(Error::InvalidRestriction(format!(
                "structural entry ({}, {}) is out of range for N = {}",
                shock + 1,
                variable + 1,
                self.n
            )));
        }
        if sign == Sign::Zero {
            return Err(Error::InvalidRestriction("zero codes are only allowed on impulse responses".into()));
        }
        let idx = shock * self.n + variable;
        match self.structural[idx] {
            Some(existing) if existing != sign => Err(Error::InvalidRestriction(format!(
                "conflicting structural codes for shock {}, variable {}",
                shock + 1,
                variable + 1
            ))),
            _ => {
                self.structural[idx] = Some(sign);
                Ok(())
            }
        }
    }

    pub fn add_narrative(&mut self, r: NarrativeRestriction) -> Result<()> {
        if r.shock >= self.n || r.variable >= self.n {
            return Err(Error::InvalidRestriction(format!(
                "narrative restriction refers to shock {} / variable {} with N = {}",
                r.shock + 1,
                r.variable + 1,
                self.n
            )));
        }
        self.narrative.push(r);
        Ok(())
    }

    pub fn irf(&self, variable: usize, shock: usize, horizon: usize) -> Option<Sign> {
        if horizon >= self.horizons {
            return None;
        }
        self.irf[self.irf_index(variable, shock, horizon)]
    }

    pub fn structural(&self, shock: usize, variable: usize) -> Option<Sign> {
        self.structural[shock * self.n + variable]
    }

    pub fn narrative(&self) -> &[NarrativeRestriction] {
        &self.narrative
    }

    /// Zero-restricted `(variable, horizon)` pairs of a shock.
    pub fn zeros(&self, shock: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for h in 0..self.horizons {
            for v in 0..self.n {
                if self.irf(v, shock, h) == Some(Sign::Zero) {
                    out.push((v, h));
                }
            }
        }
        out
    }

    pub fn has_zeros(&self) -> bool {
        self.irf.contains(&Some(Sign::Zero))
    }

    pub fn has_structural(&self) -> bool {
        self.structural.iter().any(Option::is_some)
    }

    /// Largest horizon carrying any code, if one exists.
    pub fn max_horizon(&self) -> Option<usize> {
        (0..self.horizons).rev().find(|&h| (0..self.n * self.n).any(|k| self.irf[h * self.n * self.n + k].is_some()))
    }

    pub fn max_zero_horizon(&self) -> Option<usize> {
        (0..self.horizons)
            .rev()
            .find(|&h| (0..self.n * self.n).any(|k| self.irf[h * self.n * self.n + k] == Some(Sign::Zero)))
    }

    pub fn is_empty(&self) -> bool {
        self.irf.iter().all(Option::is_none) && !self.has_structural() && self.narrative.is_empty()
    }

    /// Processing order of the shocks for the recursive zero construction:
    /// decreasing zero count, ties in user order.
    pub fn zero_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&j| std::cmp::Reverse(self.zeros(j).len()));
        order
    }

    /// Checks the recursive construction has room for every shock and the
    /// narrative windows fit in the effective sample.
    pub fn validate(&self, t_eff: usize) -> Result<()> {
        for (pos, &j) in self.zero_order().iter().enumerate() {
            let z = self.zeros(j).len();
            if z + pos >= self.n && z > 0 {
                return Err(Error::InfeasibleZeros { shock: j + 1, zeros: z, preceding: pos, n: self.n });
            }
        }
        for r in &self.narrative {
            r.validate(self.n, t_eff)?;
        }
        Ok(())
    }
}
