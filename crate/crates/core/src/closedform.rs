//! Folding a fixed configuration through the network into exact affine maps.
//!
//! For a configuration `c`, every hidden pre-activation and the output
//! logits are affine in the input: `z^(l+1) = W_hat^(1:l) x + b_hat^(1:l)`.
//! The fold builds these prefixes left to right, scaling the columns of
//! each `W^(l)` by the slopes selected by `c` without materialising the
//! scaled matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, softmax, Matrix};
use crate::netcore::{Configuration, Network};
use crate::polytope::Polytope;

/// `W_hat^(1:l)`, `b_hat^(1:l)`: the affine form of `z^(l+1)` in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePrefix {
    pub layer: usize,
    pub w_hat: Matrix,
    pub b_hat: Vec<f64>,
}

impl AffinePrefix {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.w_hat.affine(x, &self.b_hat)
    }
}

/// The linear classifier governing one configuration's polytope.
///
/// Only the final map `W_hat^(1:L-1)` is kept; the hidden prefixes are
/// encoded row-for-row in the polytope's constraints and can be recomputed
/// with [`fold_configuration`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LlcRepr")]
pub struct LocalLinearClassifier {
    pub configuration: Configuration,
    #[serde(rename = "W_hat", with = "matrix_rows")]
    pub w_hat: Matrix,
    pub b_hat: Vec<f64>,
    pub polytope: Polytope,
}

#[derive(Deserialize)]
struct LlcRepr {
    configuration: Configuration,
    #[serde(rename = "W_hat", with = "matrix_rows")]
    w_hat: Matrix,
    b_hat: Vec<f64>,
    polytope: Polytope,
}

impl From<LlcRepr> for LocalLinearClassifier {
    fn from(r: LlcRepr) -> Self {
        let mut polytope = r.polytope;
        polytope.set_configuration(r.configuration.clone());
        LocalLinearClassifier {
            configuration: r.configuration,
            w_hat: r.w_hat,
            b_hat: r.b_hat,
            polytope,
        }
    }
}

impl LocalLinearClassifier {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.w_hat.affine(x, &self.b_hat)
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn num_classes(&self) -> usize {
        self.w_hat.rows()
    }

    /// Row `class_index` of `W_hat^(1:L-1)`, on the logit scale.
    pub fn decision_features(&self, class_index: usize) -> Result<&[f64]> {
        if class_index >= self.w_hat.rows() {
            return Err(Error::OutOfRange {
                what: "class",
                index: class_index,
                valid: format!("0..{}", self.w_hat.rows()),
            });
        }
        Ok(self.w_hat.row(class_index))
    }
}

/// Folds `c` through `net`, returning prefixes for `l = 1..=L-1`.
pub fn fold_configuration(net: &Network, c: &Configuration) -> Result<Vec<AffinePrefix>> {
    c.validate(net)?;
    let act = net.activation();
    let last = net.num_layers() - 1;
    let mut prefixes = Vec::with_capacity(last);
    prefixes.push(AffinePrefix {
        layer: 1,
        w_hat: net.weight(1).clone(),
        b_hat: net.bias(1).to_vec(),
    });

    for l in 2..=last {
        let offset = net.hidden_offset(l);
        let n_l = net.layer_size(l);
        let states = &c.states()[offset..offset + n_l];
        let slopes: Vec<f64> = states.iter().map(|&s| act.piece(s).slope).collect();
        let intercepts: Vec<f64> = states.iter().map(|&s| act.piece(s).intercept).collect();

        let w = net.weight(l);
        let prev = prefixes.last().unwrap();
        let mut w_hat = Matrix::zeros(w.rows(), prev.w_hat.cols());
        let mut b_hat = Vec::with_capacity(w.rows());
        for i in 0..w.rows() {
            let w_row = w.row(i);
            let mut bias = 0.0;
            let out = w_hat.row_mut(i);
            for (j, (&wij, &r)) in w_row.iter().zip(&slopes).enumerate() {
                if r == 0.0 {
                    continue;
                }
                let scaled = wij * r;
                axpy(scaled, prev.w_hat.row(j), out);
                bias += scaled * prev.b_hat[j];
            }
            // b_tilde = W t + b
            bias += dot(w_row, &intercepts) + net.bias(l)[i];
            b_hat.push(bias);
        }
        prefixes.push(AffinePrefix {
            layer: l,
            w_hat,
            b_hat,
        });
    }
    Ok(prefixes)
}

/// Polytope boundary features of hidden neuron `(l, i)` (both 1-based):
/// the coefficients and offset of `z_i^(l)` as an affine form in the input.
pub fn pbf(
    net: &Network,
    prefixes: &[AffinePrefix],
    layer: usize,
    neuron: usize,
) -> Result<(Vec<f64>, f64)> {
    let hidden = 2..net.num_layers();
    if !hidden.contains(&layer) {
        return Err(Error::OutOfRange {
            what: "hidden layer",
            index: layer,
            valid: format!("2..={}", net.num_layers() - 1),
        });
    }
    if neuron == 0 || neuron > net.layer_size(layer) {
        return Err(Error::OutOfRange {
            what: "neuron",
            index: neuron,
            valid: format!("1..={}", net.layer_size(layer)),
        });
    }
    let prefix = prefixes
        .get(layer - 2)
        .filter(|p| p.layer == layer - 1)
        .ok_or_else(|| Error::dim("prefix list", net.num_layers() - 1, prefixes.len()))?;
    Ok((
        prefix.w_hat.row(neuron - 1).to_vec(),
        prefix.b_hat[neuron - 1],
    ))
}

pub(crate) mod matrix_rows {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Matrix;

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        m.to_rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).ok_or_else(|| D::Error::custom("ragged matrix rows"))
    }
}
