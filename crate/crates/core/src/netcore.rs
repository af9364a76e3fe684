//! Piecewise-linear feed-forward networks: representation, forward pass and
//! activation configurations.
//!
//! Layers are numbered from 1 (input) to `L` (softmax output). Hidden layers
//! are `2..=L-1`. The weight matrix `weights[l - 1]` maps layer `l` to layer
//! `l + 1` and has shape `n_{l+1} x n_l`.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{softmax, Matrix};

/// One linear piece `r * z + t` of an activation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub slope: f64,
    pub intercept: f64,
}

/// A piecewise-linear activation with `k` pieces.
///
/// Piece `q` (0-based) governs the half-open interval
/// `(breakpoints[q-1], breakpoints[q]]`, with `-inf` and `+inf` standing in
/// for the missing outer endpoints. Strictly increasing breakpoints make the
/// intervals a partition of the real line, and a value sitting exactly on a
/// breakpoint belongs to the piece on its left.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSpec {
    pieces: Vec<Piece>,
    breakpoints: Vec<f64>,
    name: Option<&'static str>,
}

impl ActivationSpec {
    pub fn new(pieces: Vec<Piece>, breakpoints: Vec<f64>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidActivation(
                "at least one piece required".into(),
            ));
        }
        if pieces.len() > u8::MAX as usize {
            return Err(Error::InvalidActivation(format!(
                "at most {} pieces supported, got {}",
                u8::MAX,
                pieces.len()
            )));
        }
        if breakpoints.len() + 1 != pieces.len() {
            return Err(Error::InvalidActivation(format!(
                "{} pieces need {} breakpoints, got {}",
                pieces.len(),
                pieces.len() - 1,
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidActivation(
                "breakpoints must be finite".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidActivation(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if pieces
            .iter()
            .any(|p| !p.slope.is_finite() || !p.intercept.is_finite())
        {
            return Err(Error::InvalidActivation(
                "non-finite slope or intercept".into(),
            ));
        }
        Ok(ActivationSpec {
            pieces,
            breakpoints,
            name: None,
        })
    }

    /// ReLU: `(-inf, 0]` with slope 0, `(0, inf)` with slope 1.
    pub fn relu() -> Self {
        ActivationSpec {
            pieces: vec![
                Piece {
                    slope: 0.0,
                    intercept: 0.0,
                },
                Piece {
                    slope: 1.0,
                    intercept: 0.0,
                },
            ],
            breakpoints: vec![0.0],
            name: Some("relu"),
        }
    }

    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        ActivationSpec::new(
            vec![
                Piece {
                    slope: alpha,
                    intercept: 0.0,
                },
                Piece {
                    slope: 1.0,
                    intercept: 0.0,
                },
            ],
            vec![0.0],
        )
    }

    /// Clamp to `[-1, 1]`; three pieces.
    pub fn hard_tanh() -> Self {
        ActivationSpec::new(
            vec![
                Piece {
                    slope: 0.0,
                    intercept: -1.0,
                },
                Piece {
                    slope: 1.0,
                    intercept: 0.0,
                },
                Piece {
                    slope: 0.0,
                    intercept: 1.0,
                },
            ],
            vec![-1.0, 1.0],
        )
        .expect("hard tanh is well formed")
    }

    pub fn k(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_relu(&self) -> bool {
        self.name == Some("relu")
    }

    /// 1-based state of a pre-activation value.
    pub fn state_of(&self, z: f64) -> u8 {
        let q = self.breakpoints.iter().take_while(|&&b| z > b).count();
        (q + 1) as u8
    }

    pub fn piece(&self, state: u8) -> Piece {
        self.pieces[state as usize - 1]
    }

    /// `(lower, upper)` endpoints of the interval for a 1-based state, with
    /// `None` for an infinite endpoint. The lower endpoint is open, the upper
    /// endpoint closed.
    pub fn interval(&self, state: u8) -> (Option<f64>, Option<f64>) {
        let q = state as usize - 1;
        let lower = q.checked_sub(1).map(|i| self.breakpoints[i]);
        let upper = self.breakpoints.get(q).copied();
        (lower, upper)
    }

    pub fn apply(&self, z: f64) -> (f64, u8) {
        let state = self.state_of(z);
        let p = self.piece(state);
        (p.slope * z + p.intercept, state)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ActivationRepr {
    Named(String),
    Custom {
        pieces: Vec<Piece>,
        breakpoints: Vec<f64>,
    },
}

impl Serialize for ActivationSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.name {
            Some(name) => ActivationRepr::Named(name.to_string()).serialize(s),
            None => ActivationRepr::Custom {
                pieces: self.pieces.clone(),
                breakpoints: self.breakpoints.clone(),
            }
            .serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ActivationSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match ActivationRepr::deserialize(d)? {
            ActivationRepr::Named(name) if name == "relu" => Ok(ActivationSpec::relu()),
            ActivationRepr::Named(name) => {
                Err(D::Error::custom(format!("unknown activation {name:?}")))
            }
            ActivationRepr::Custom {
                pieces,
                breakpoints,
            } => ActivationSpec::new(pieces, breakpoints).map_err(D::Error::custom),
        }
    }
}

/// Per-hidden-neuron activation states, layer-major, one byte per neuron.
/// Entries are 1-based piece indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<u8>);

impl Configuration {
    pub fn new(states: Vec<u8>) -> Self {
        Configuration(states)
    }

    pub fn states(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks length and state range against a network.
    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.0.len() != net.hidden_count() {
            return Err(Error::dim(
                "configuration length",
                net.hidden_count(),
                self.0.len(),
            ));
        }
        let k = net.activation().k();
        if let Some(&bad) = self.0.iter().find(|&&s| s == 0 || s as usize > k) {
            return Err(Error::OutOfRange {
                what: "activation state",
                index: bad as usize,
                valid: format!("1..={k}"),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `z^(l)` for `l = 2..=L`; index 0 holds `z^(2)`.
    pub pre_activations: Vec<Vec<f64>>,
    /// `a^(l)` for `l = 1..=L-1`; index 0 is the input itself.
    pub post_activations: Vec<Vec<f64>>,
    /// Softmax of the final pre-activation.
    pub output: Vec<f64>,
    pub configuration: Configuration,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        self.pre_activations.last().expect("at least one layer")
    }

    pub fn predicted_class(&self) -> usize {
        crate::linalg::argmax(&self.output)
    }
}

/// An immutable piecewise-linear network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    activation: ActivationSpec,
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activation: ActivationSpec,
}

impl Network {
    pub fn new(
        layer_sizes: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        activation: ActivationSpec,
    ) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::InvalidNetwork(format!(
                "need at least 3 layers (one hidden), got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidNetwork("layer sizes must be positive".into()));
        }
        let transitions = layer_sizes.len() - 1;
        if weights.len() != transitions || biases.len() != transitions {
            return Err(Error::InvalidNetwork(format!(
                "expected {transitions} weight matrices and bias vectors, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..transitions {
            let (rows, cols) = (layer_sizes[l + 1], layer_sizes[l]);
            let w = &weights[l];
            if w.rows() != rows || w.cols() != cols {
                return Err(Error::InvalidNetwork(format!(
                    "W^({}) has shape {}x{}, expected {rows}x{cols}",
                    l + 1,
                    w.rows(),
                    w.cols()
                )));
            }
            if biases[l].len() != rows {
                return Err(Error::InvalidNetwork(format!(
                    "b^({}) has length {}, expected {rows}",
                    l + 1,
                    biases[l].len()
                )));
            }
            if !w.is_finite() || biases[l].iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "non-finite parameter in layer transition {}",
                    l + 1
                )));
            }
        }
        Ok(Network {
            layer_sizes,
            weights,
            biases,
            activation,
        })
    }

    /// Glorot-uniform initialised network with zero biases.
    pub fn random<R: rand::Rng>(
        layer_sizes: &[usize],
        activation: ActivationSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_sizes.windows(2) {
            let scale = (6.0 / (w[0] + w[1]) as f64).sqrt();
            let data = (0..w[0] * w[1])
                .map(|_| rng.gen_range(-scale..=scale))
                .collect();
            weights.push(Matrix::from_row_major(w[1], w[0], data).expect("sized buffer"));
            biases.push(vec![0.0; w[1]]);
        }
        Network::new(layer_sizes.to_vec(), weights, biases, activation)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Number of layers `L`.
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total hidden neuron count `N`.
    pub fn hidden_count(&self) -> usize {
        self.layer_sizes[1..self.layer_sizes.len() - 1].iter().sum()
    }

    /// Size of layer `l` (1-based).
    pub fn layer_size(&self, l: usize) -> usize {
        self.layer_sizes[l - 1]
    }

    /// `W^(l)` (1-based, `l` in `1..L`).
    pub fn weight(&self, l: usize) -> &Matrix {
        &self.weights[l - 1]
    }

    /// `b^(l)` (1-based, `l` in `1..L`).
    pub fn bias(&self, l: usize) -> &[f64] {
        &self.biases[l - 1]
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    /// Offset of hidden layer `l`'s first neuron inside a configuration.
    pub fn hidden_offset(&self, l: usize) -> usize {
        self.layer_sizes[1..l - 1].iter().sum()
    }

    /// Mutable parameter access for training. Callers must keep every
    /// entry finite.
    pub(crate) fn params_mut(&mut self) -> (&mut [Matrix], &mut [Vec<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.len()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("input entry {i} is not finite")));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let transitions = self.weights.len();
        let mut pre = Vec::with_capacity(transitions);
        let mut post = Vec::with_capacity(transitions);
        let mut states = Vec::with_capacity(self.hidden_count());
        post.push(x.to_vec());
        for l in 0..transitions {
            let z = self.weights[l].affine(post.last().unwrap(), &self.biases[l]);
            if l + 1 < transitions {
                let a = z
                    .iter()
                    .map(|&zi| {
                        let (v, s) = self.activation.apply(zi);
                        states.push(s);
                        v
                    })
                    .collect();
                post.push(a);
            }
            pre.push(z);
        }
        let output = softmax(pre.last().unwrap());
        Ok(ForwardTrace {
            pre_activations: pre,
            post_activations: post,
            output,
            configuration: Configuration(states),
        })
    }

    /// Configuration of `x`; stops before the output layer.
    pub fn conf(&self, x: &[f64]) -> Result<Configuration> {
        self.check_input(x)?;
        let mut states = Vec::with_capacity(self.hidden_count());
        let mut a = x.to_vec();
        for l in 0..self.weights.len() - 1 {
            let z = self.weights[l].affine(&a, &self.biases[l]);
            a = z
                .iter()
                .map(|&zi| {
                    let (v, s) = self.activation.apply(zi);
                    states.push(s);
                    v
                })
                .collect();
        }
        Ok(Configuration(states))
    }

    /// Positive-class (index 1) probability, or the single output for a
    /// one-output network.
    pub fn positive_probability(&self, x: &[f64]) -> Result<f64> {
        let out = self.forward(x)?.output;
        Ok(out[out.len().min(2) - 1])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.repr()).expect("network serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let repr: NetworkRepr = serde_path_to_error::deserialize(de).map_err(|e| e.to_string())?;
        Network::from_repr(repr).map_err(|e| e.to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Network::from_json(&text).map_err(|m| Error::parse(path, m))
    }

    /// SHA-256 of the canonical JSON serialisation, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    fn repr(&self) -> NetworkRepr {
        NetworkRepr {
            layer_sizes: self.layer_sizes.clone(),
            weights: self.weights.iter().map(|w| w.as_slice().to_vec()).collect(),
            biases: self.biases.clone(),
            activation: self.activation.clone(),
        }
    }

    fn from_repr(repr: NetworkRepr) -> Result<Self> {
        let sizes = &repr.layer_sizes;
        if repr.weights.len() + 1 != sizes.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} layers need {} weight arrays, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                repr.weights.len()
            )));
        }
        let weights = repr
            .weights
            .into_iter()
            .enumerate()
            .map(|(l, flat)| {
                let (rows, cols) = (sizes[l + 1], sizes[l]);
                let len = flat.len();
                Matrix::from_row_major(rows, cols, flat).ok_or_else(|| {
                    Error::InvalidNetwork(format!(
                        "weights[{l}] has {len} entries, expected {}",
                        rows * cols
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(repr.layer_sizes, weights, repr.biases, repr.activation)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::net_a;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const INACTIVE: u8 = 1;
    const ACTIVE: u8 = 2;

    /// Scalar re-derivation of NET-A's forward pass.
    fn net_a_oracle(x: [f64; 2]) -> ([f64; 2], [u8; 2], [f64; 2]) {
        let z2 = [x[0], x[1]];
        let a2 = [z2[0].max(0.0), z2[1].max(0.0)];
        let states = [
            if z2[0] > 0.0 { ACTIVE } else { INACTIVE },
            if z2[1] > 0.0 { ACTIVE } else { INACTIVE },
        ];
        let z3 = [a2[0] - a2[1], -a2[0] + a2[1]];
        (z2, states, z3)
    }

    #[test]
    fn net_a_forward_matches_scalar_oracle() {
        let net = net_a();
        for x in [
            [1.0, -1.0],
            [0.0, 0.0],
            [-3.0, 2.0],
            [5.0, 5.0],
            [0.25, 7.5],
        ] {
            let t = net.forward(&x).unwrap();
            let (z2, states, z3) = net_a_oracle(x);
            assert_eq!(t.pre_activations[0], z2.to_vec());
            assert_eq!(t.pre_activations[1], z3.to_vec());
            assert_eq!(t.configuration.states(), &states);
            assert_eq!(t.post_activations[0], x.to_vec());
        }
    }

    #[test]
    fn net_a_examples() {
        let net = net_a();
        let t = net.forward(&[1.0, -1.0]).unwrap();
        assert_eq!(t.pre_activations[0], vec![1.0, -1.0]);
        assert_eq!(t.configuration.states(), &[ACTIVE, INACTIVE]);
        // softmax(1, -1) = (1 / (1 + e^-2), e^-2 / (1 + e^-2))
        let e = (-2.0f64).exp();
        assert!((t.output[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((t.output[0] - 0.8808).abs() < 1e-4);
        assert!((t.output[1] - 0.1192).abs() < 1e-4);

        let t = net.forward(&[0.0, 0.0]).unwrap();
        assert_eq!(t.configuration.states(), &[INACTIVE, INACTIVE]);
        assert_eq!(t.output, vec![0.5, 0.5]);

        let t = net.forward(&[-3.0, 2.0]).unwrap();
        assert_eq!(t.configuration.states(), &[INACTIVE, ACTIVE]);
        assert_eq!(t.pre_activations[1], vec![-2.0, 2.0]);
        assert_eq!(t.output, softmax(&[-2.0, 2.0]));
    }

    #[test]
    fn conf_examples_and_agreement_with_forward() {
        let net = net_a();
        assert_eq!(
            net.conf(&[1.0, -1.0]).unwrap().states(),
            &[ACTIVE, INACTIVE]
        );
        assert_eq!(
            net.conf(&[0.0, 0.0]).unwrap().states(),
            &[INACTIVE, INACTIVE]
        );
        assert_eq!(net.conf(&[5.0, 5.0]).unwrap().states(), &[ACTIVE, ACTIVE]);
        for x in [[0.3, -0.1], [-2.0, -2.0], [1e-300, -1e-300]] {
            assert_eq!(
                net.conf(&x).unwrap(),
                net.forward(&x).unwrap().configuration
            );
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = net_a();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension {
                expected: 2,
                actual: 1,
                ..
            })
        ));
        assert!(matches!(
            net.forward(&[f64::NAN, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            net.conf(&[f64::INFINITY, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn network_shape_validation() {
        let bad = Network::new(
            vec![2, 2, 2],
            vec![Matrix::identity(2), Matrix::zeros(2, 3)],
            vec![vec![0.0; 2], vec![0.0; 2]],
            ActivationSpec::relu(),
        );
        assert!(matches!(bad, Err(Error::InvalidNetwork(_))));
        let too_shallow = Network::new(
            vec![2, 2],
            vec![Matrix::identity(2)],
            vec![vec![0.0; 2]],
            ActivationSpec::relu(),
        );
        assert!(too_shallow.is_err());
        let nan = Network::new(
            vec![1, 1, 1],
            vec![
                Matrix::zeros(1, 1),
                Matrix::from_rows(&[[f64::NAN]]).unwrap(),
            ],
            vec![vec![0.0], vec![0.0]],
            ActivationSpec::relu(),
        );
        assert!(nan.is_err());
    }

    #[test]
    fn activation_states_and_intervals() {
        let relu = ActivationSpec::relu();
        assert_eq!(relu.k(), 2);
        assert_eq!(relu.state_of(0.0), 1);
        assert_eq!(relu.state_of(-0.0), 1);
        assert_eq!(relu.state_of(f64::MIN_POSITIVE), 2);
        assert_eq!(relu.interval(1), (None, Some(0.0)));
        assert_eq!(relu.interval(2), (Some(0.0), None));

        let ht = ActivationSpec::hard_tanh();
        assert_eq!(ht.state_of(-1.0), 1);
        assert_eq!(ht.state_of(0.0), 2);
        assert_eq!(ht.state_of(1.0), 2);
        assert_eq!(ht.state_of(1.5), 3);
        assert_eq!(ht.apply(2.0), (1.0, 3));
        assert_eq!(ht.interval(2), (Some(-1.0), Some(1.0)));

        assert!(ActivationSpec::new(vec![], vec![]).is_err());
        let p = Piece {
            slope: 1.0,
            intercept: 0.0,
        };
        assert!(ActivationSpec::new(vec![p, p, p], vec![1.0, 1.0]).is_err());
        assert!(ActivationSpec::new(vec![p, p], vec![]).is_err());
        assert!(ActivationSpec::new(vec![p], vec![]).is_ok());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::random(&[3, 5, 4, 2], ActivationSpec::relu(), &mut rng).unwrap();
        let back = Network::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.fingerprint(), net.fingerprint());

        let leaky = Network::random(
            &[2, 3, 2],
            ActivationSpec::leaky_relu(0.1).unwrap(),
            &mut rng,
        )
        .unwrap();
        let back = Network::from_json(&leaky.to_json()).unwrap();
        assert_eq!(back.activation(), leaky.activation());
    }

    #[test]
    fn json_layout_is_row_major_per_layer() {
        let json: serde_json::Value = serde_json::from_str(&net_a().to_json()).unwrap();
        assert_eq!(json["layer_sizes"], serde_json::json!([2, 2, 2]));
        assert_eq!(
            json["weights"][1],
            serde_json::json!([1.0, -1.0, -1.0, 1.0])
        );
        assert_eq!(json["activation"], "relu");
    }

    #[test]
    fn json_errors_name_the_field() {
        let err = Network::from_json(r#"{"layer_sizes":[2,2,2],"weights":[[1,0,0,1],[1,2,3]],"biases":[[0,0],[0,0]],"activation":"relu"}"#)
            .unwrap_err();
        assert!(err.contains("weights[1]"), "{err}");
        let err = Network::from_json(r#"{"layer_sizes":[2,2,2],"weights":"x"}"#).unwrap_err();
        assert!(err.contains("weights"), "{err}");
        let err = Network::from_json(
            r#"{"layer_sizes":[1,1,1],"weights":[[1],[1]],"biases":[[0],[0]],"activation":"gelu"}"#,
        )
        .unwrap_err();
        assert!(err.contains("gelu"), "{err}");
    }

    #[test]
    fn fingerprint_changes_with_any_weight() {
        let net = net_a();
        let mut other = net.clone();
        other.params_mut().0[1][(0, 0)] = 1.0 + f64::EPSILON;
        assert_ne!(net.fingerprint(), other.fingerprint());
    }
}
