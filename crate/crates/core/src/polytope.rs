//! Half-space description of the input region sharing one configuration.

use serde::{Deserialize, Serialize};

use crate::closedform::{pbf, AffinePrefix};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::lpsolver::{LinearProgram, LpOutcome, Relation};
use crate::netcore::{Configuration, Network};

/// Absolute slack under which a constraint counts as implied by the others.
pub const EPS_REDUNDANT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// `coeff · x > bound`
    Gt,
    /// `coeff · x <= bound`
    Leq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub coeff: Vec<f64>,
    pub bound: f64,
    pub sense: Sense,
    /// 1-based layer of the neuron this constraint came from.
    pub layer: usize,
    /// 1-based neuron index within `layer`.
    pub neuron: usize,
    #[serde(default)]
    pub redundant: bool,
}

impl HalfSpace {
    pub fn holds(&self, x: &[f64]) -> bool {
        let v = dot(&self.coeff, x);
        match self.sense {
            Sense::Gt => v > self.bound,
            Sense::Leq => v <= self.bound,
        }
    }

    /// The constraint as `a · x <= b` with the strict inequality relaxed.
    pub fn as_leq(&self) -> (Vec<f64>, f64) {
        match self.sense {
            Sense::Leq => (self.coeff.clone(), self.bound),
            Sense::Gt => (self.coeff.iter().map(|v| -v).collect(), -self.bound),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    #[serde(skip)]
    configuration: Configuration,
    constraints: Vec<HalfSpace>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    redundancy_checked: bool,
    /// Set when redundancy removal found no point of the polytope in its box.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    empty_within_bbox: bool,
}

impl Polytope {
    pub fn new(configuration: Configuration, constraints: Vec<HalfSpace>) -> Self {
        Polytope {
            configuration,
            constraints,
            redundancy_checked: false,
            empty_within_bbox: false,
        }
    }

    pub fn configuration(&self) -> &Configuration {
        &self.configuration
    }

    pub(crate) fn set_configuration(&mut self, c: Configuration) {
        self.configuration = c;
    }

    pub fn constraints(&self) -> &[HalfSpace] {
        &self.constraints
    }

    pub fn dim(&self) -> Option<usize> {
        self.constraints.first().map(|h| h.coeff.len())
    }

    pub fn redundancy_checked(&self) -> bool {
        self.redundancy_checked
    }

    pub fn empty_within_bbox(&self) -> bool {
        self.empty_within_bbox
    }

    pub fn non_redundant(&self) -> impl Iterator<Item = &HalfSpace> {
        self.constraints.iter().filter(|h| !h.redundant)
    }

    /// Exact membership test; strict constraints use no tolerance.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::dim("polytope point", d, x.len()));
            }
        }
        Ok(self.constraints.iter().all(|h| h.holds(x)))
    }

    /// Membership using only the constraints not marked redundant.
    pub fn contains_reduced(&self, x: &[f64]) -> Result<bool> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::dim("polytope point", d, x.len()));
            }
        }
        Ok(self.non_redundant().all(|h| h.holds(x)))
    }

    /// Marks constraints implied by the remaining ones within `bbox`.
    ///
    /// Constraints are tested in order, each against the not-yet-discarded
    /// others plus the box. If the others leave nothing inside the box, all
    /// flags are cleared and the polytope is recorded as empty.
    pub fn remove_redundant(&self, bbox: &BoundingBox) -> Result<Polytope> {
        let mut out = self.clone();
        out.redundancy_checked = true;
        out.empty_within_bbox = false;
        out.constraints.iter_mut().for_each(|h| h.redundant = false);
        let Some(d) = self.dim() else {
            return Ok(out);
        };
        if bbox.dim() != d {
            return Err(Error::dim("bounding box", d, bbox.dim()));
        }
        let rows: Vec<(Vec<f64>, f64)> = self.constraints.iter().map(HalfSpace::as_leq).collect();

        for i in 0..rows.len() {
            let mut lp = LinearProgram::maximize(rows[i].0.clone())?;
            for (v, (lo, up)) in bbox.lower.iter().zip(&bbox.upper).enumerate() {
                lp.set_bounds(v, *lo, *up)?;
            }
            for (j, (a, b)) in rows.iter().enumerate() {
                if j != i && !out.constraints[j].redundant {
                    lp.constrain(a.clone(), Relation::Le, *b)?;
                }
            }
            match lp.solve()? {
                LpOutcome::Optimal { optimum, .. } => {
                    out.constraints[i].redundant = optimum <= rows[i].1 + EPS_REDUNDANT;
                }
                LpOutcome::Infeasible => {
                    log::debug!("polytope {} is empty within its box", self.configuration);
                    out.constraints.iter_mut().for_each(|h| h.redundant = false);
                    out.empty_within_bbox = true;
                    return Ok(out);
                }
                LpOutcome::Unbounded => {
                    return Err(Error::Lp(
                        "unbounded redundancy LP inside a finite box".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Translates each hidden neuron's activation interval into half-spaces.
pub fn build_polytope(
    net: &Network,
    prefixes: &[AffinePrefix],
    c: &Configuration,
) -> Result<Polytope> {
    c.validate(net)?;
    let act = net.activation();
    let mut constraints = Vec::with_capacity(c.len());
    let mut states = c.states().iter();
    for layer in 2..net.num_layers() {
        for neuron in 1..=net.layer_size(layer) {
            let (coeff, offset) = pbf(net, prefixes, layer, neuron)?;
            let (lower, upper) = act.interval(*states.next().unwrap());
            if let Some(a) = lower {
                constraints.push(HalfSpace {
                    coeff: coeff.clone(),
                    bound: a - offset,
                    sense: Sense::Gt,
                    layer,
                    neuron,
                    redundant: false,
                });
            }
            if let Some(b) = upper {
                constraints.push(HalfSpace {
                    coeff,
                    bound: b - offset,
                    sense: Sense::Leq,
                    layer,
                    neuron,
                    redundant: false,
                });
            }
        }
    }
    Ok(Polytope::new(c.clone(), constraints))
}

/// Axis-aligned box bounding the data domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("bounding box", lower.len(), upper.len()));
        }
        for (i, (lo, up)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !up.is_finite() || lo > up {
                return Err(Error::Domain(format!("bad box side {i}: [{lo}, {up}]")));
            }
        }
        Ok(BoundingBox { lower, upper })
    }

    /// Per-coordinate min/max of `rows`, widened by 10% of the range on each
    /// side (0.1 when the range is zero).
    pub fn from_data<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = rows.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Domain("bounding box of an empty dataset".into()))?;
        let mut lower = first.to_vec();
        let mut upper = first.to_vec();
        for row in iter {
            if row.len() != lower.len() {
                return Err(Error::dim("bounding box row", lower.len(), row.len()));
            }
            for (k, &v) in row.iter().enumerate() {
                lower[k] = lower[k].min(v);
                upper[k] = upper[k].max(v);
            }
        }
        for (lo, up) in lower.iter_mut().zip(upper.iter_mut()) {
            let range = *up - *lo;
            let margin = if range > 0.0 { 0.1 * range } else { 0.1 };
            *lo -= margin;
            *up += margin;
        }
        BoundingBox::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, up))| lo <= v && v <= up)
    }
}
