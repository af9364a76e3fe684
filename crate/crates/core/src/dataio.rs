//! Datasets: the synthetic 2-D task, Fashion-MNIST pairs in IDX format, and
//! the `OBX1` binary cache.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const SYN_QUADRANGLE: [(f64, f64); 4] = [(0.0, 0.0), (4.0, 0.0), (5.0, 3.0), (1.0, 4.0)];
pub const OBX_MAGIC: &[u8; 4] = b"OBX1";
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    Unspecified,
}

/// Instances stored row-major with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<u8>,
    dim: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<u8>, split: Split) -> Result<Self> {
        if dim == 0 && !labels.is_empty() {
            return Err(Error::Domain("feature dimension must be positive".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::dim(
                "dataset features",
                labels.len() * dim,
                features.len(),
            ));
        }
        Ok(Dataset {
            features,
            labels,
            dim,
            split,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>, split: Split) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(Error::dim("dataset labels", rows.len(), labels.len()));
        }
        let mut features = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::dim("dataset row", dim, r.len()));
            }
            features.extend_from_slice(r);
        }
        Dataset::new(features, dim, labels, split)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for &l in &self.labels {
            c[(l as usize).min(1)] += 1;
        }
        c
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            dim: self.dim,
            split: self.split,
        }
    }

    /// Seeded sample of `k` distinct indices (all of them if `k >= len`),
    /// returned in ascending order.
    pub fn sample_indices(&self, k: usize, seed: u64) -> Vec<usize> {
        if k >= self.len() {
            return (0..self.len()).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, self.len(), k).into_vec();
        idx.sort_unstable();
        idx
    }

    /// Writes the `OBX1` cache: magic, u32 count, u32 d (little-endian),
    /// f64 features row-major, u8 labels.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            w.write_all(OBX_MAGIC)?;
            w.write_all(&(self.len() as u32).to_le_bytes())?;
            w.write_all(&(self.dim as u32).to_le_bytes())?;
            for v in &self.features {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&self.labels)?;
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 12 || &bytes[..4] != OBX_MAGIC {
            return Err(Error::parse(path, "missing OBX1 header"));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = 12 + n * d * 8 + n;
        if bytes.len() != expected {
            return Err(Error::parse(
                path,
                format!(
                    "expected {expected} bytes for {n}x{d}, found {}",
                    bytes.len()
                ),
            ));
        }
        let body = &bytes[12..12 + n * d * 8];
        let features: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::parse(
                path,
                format!("non-finite feature at offset {i}"),
            ));
        }
        let labels = bytes[12 + n * d * 8..].to_vec();
        Dataset::new(features, d, labels, Split::Unspecified)
    }
}

/// Signed area test: true when `p` lies inside or on the convex quadrangle.
pub fn in_syn_quadrangle(x1: f64, x2: f64) -> bool {
    let q = SYN_QUADRANGLE;
    (0..4).all(|i| {
        let (ax, ay) = q[i];
        let (bx, by) = q[(i + 1) % 4];
        (bx - ax) * (x2 - ay) - (by - ay) * (x1 - ax) >= 0.0
    })
}

pub fn syn_label(x1: f64, x2: f64) -> u8 {
    u8::from(x2 > 1.5 + 0.8 * (1.7 * x1).sin())
}

/// `n` points drawn uniformly from the SYN quadrangle by rejection from its
/// bounding rectangle `[0,5] x [0,4]`.
pub fn gen_syn(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Domain("gen_syn needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let x1 = rng.gen_range(0.0..5.0);
        let x2 = rng.gen_range(0.0..4.0);
        if in_syn_quadrangle(x1, x2) {
            features.extend_from_slice(&[x1, x2]);
            labels.push(syn_label(x1, x2));
        }
    }
    Dataset::new(features, 2, labels, Split::Train)
}

/// A raw IDX unsigned-byte tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

pub fn read_idx(path: impl AsRef<Path>, magic: u32) -> Result<IdxTensor> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut word = [0u8; 4];
    r.read_exact(&mut word)
        .map_err(|_| Error::parse(path, "truncated IDX header"))?;
    let found = u32::from_be_bytes(word);
    if found != magic {
        return Err(Error::parse(
            path,
            format!("bad IDX magic {found:#010x}, expected {magic:#010x}"),
        ));
    }
    let ndims = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        r.read_exact(&mut word)
            .map_err(|_| Error::parse(path, "truncated IDX dimensions"))?;
        dims.push(u32::from_be_bytes(word));
    }
    let len: usize = dims.iter().map(|&d| d as usize).product();
    let mut data = Vec::with_capacity(len);
    r.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    if data.len() != len {
        return Err(Error::parse(
            path,
            format!("IDX body has {} bytes, header promises {len}", data.len()),
        ));
    }
    Ok(IdxTensor { dims, data })
}

pub fn write_idx(path: impl AsRef<Path>, tensor: &IdxTensor) -> Result<()> {
    let path = path.as_ref();
    let len: usize = tensor.dims.iter().map(|&d| d as usize).product();
    if len != tensor.data.len() {
        return Err(Error::dim("IDX body", len, tensor.data.len()));
    }
    let magic = 0x0800u32 | tensor.dims.len() as u32;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        w.write_all(&magic.to_be_bytes())?;
        for d in &tensor.dims {
            w.write_all(&d.to_be_bytes())?;
        }
        w.write_all(&tensor.data)?;
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Two Fashion-MNIST classes as a binary task: `class_a -> 1`,
/// `class_b -> 0`, pixels scaled to `[0, 1]`, at most `per_class_cap`
/// instances per class in file order.
pub fn load_fmnist_pair(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    class_a: u8,
    class_b: u8,
    per_class_cap: usize,
    split: Split,
) -> Result<Dataset> {
    if class_a == class_b || class_a > 9 || class_b > 9 {
        return Err(Error::Domain(format!(
            "class pair ({class_a}, {class_b}) must be two distinct digits 0..=9"
        )));
    }
    let images = read_idx(&images_path, IDX_IMAGES_MAGIC)?;
    let labels = read_idx(&labels_path, IDX_LABELS_MAGIC)?;
    let n = images.dims[0] as usize;
    if labels.dims[0] as usize != n {
        return Err(Error::parse(
            labels_path.as_ref(),
            format!("{} labels for {n} images", labels.dims[0]),
        ));
    }
    let d = (images.dims[1] * images.dims[2]) as usize;
    let mut features = Vec::new();
    let mut out_labels = Vec::new();
    let mut taken = [0usize; 2];
    for (i, &l) in labels.data.iter().enumerate() {
        let target = if l == class_a {
            1
        } else if l == class_b {
            0
        } else {
            continue;
        };
        if taken[target] >= per_class_cap {
            continue;
        }
        taken[target] += 1;
        features.extend(
            images.data[i * d..(i + 1) * d]
                .iter()
                .map(|&p| p as f64 / 255.0),
        );
        out_labels.push(target as u8);
    }
    if taken[1] == 0 {
        return Err(Error::EmptyClass(class_a));
    }
    if taken[0] == 0 {
        return Err(Error::EmptyClass(class_b));
    }
    Dataset::new(features, d, out_labels, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_fixture(dir: &Path, labels: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let n = labels.len() as u32;
        let data: Vec<u8> = (0..labels.len() * 4)
            .map(|i| (i * 37 % 256) as u8)
            .collect();
        let img = dir.join("img");
        let lab = dir.join("lab");
        write_idx(
            &img,
            &IdxTensor {
                dims: vec![n, 2, 2],
                data,
            },
        )
        .unwrap();
        write_idx(
            &lab,
            &IdxTensor {
                dims: vec![n],
                data: labels.to_vec(),
            },
        )
        .unwrap();
        (img, lab)
    }

    #[test]
    fn syn_points_lie_in_quadrangle() {
        let ds = gen_syn(20_000, 1).unwrap();
        assert_eq!(ds.len(), 20_000);
        for r in ds.rows() {
            // independent half-plane form of the four edges
            let (x, y) = (r[0], r[1]);
            assert!(y >= 0.0);
            assert!(3.0 * x - y <= 12.0);
            assert!(x + 4.0 * y <= 17.0);
            assert!(4.0 * x - y >= 0.0);
        }
        let [neg, pos] = ds.class_counts();
        assert!(neg > 2000 && pos > 2000, "{neg} / {pos}");
    }

    #[test]
    fn syn_is_deterministic_and_minimal() {
        assert_eq!(gen_syn(50, 9).unwrap(), gen_syn(50, 9).unwrap());
        assert_ne!(gen_syn(50, 9).unwrap(), gen_syn(50, 10).unwrap());
        assert_eq!(gen_syn(1, 0).unwrap().len(), 1);
        assert!(gen_syn(0, 0).is_err());
    }

    #[test]
    fn fmnist_pair_filtering() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = write_fixture(dir.path(), &[9, 8, 3, 9, 9, 8, 0]);
        let ds = load_fmnist_pair(&img, &lab, 9, 8, 2, Split::Train).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.labels(), &[1, 0, 1, 0]);
        assert_eq!(ds.dim(), 4);
        // second 9 is image index 3
        let raw: Vec<f64> = (12..16).map(|i| (i * 37 % 256) as f64 / 255.0).collect();
        assert_eq!(ds.row(2), raw.as_slice());
        assert!(matches!(
            load_fmnist_pair(&img, &lab, 9, 8, 0, Split::Train),
            Err(Error::EmptyClass(9))
        ));
        assert!(matches!(
            load_fmnist_pair(&img, &lab, 9, 5, 10, Split::Train),
            Err(Error::EmptyClass(5))
        ));
        assert!(load_fmnist_pair(&img, &lab, 9, 9, 10, Split::Train).is_err());
    }

    #[test]
    fn idx_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = write_fixture(dir.path(), &[1, 2]);
        assert!(matches!(
            read_idx(&img, IDX_LABELS_MAGIC),
            Err(Error::Parse { .. })
        ));
        let bytes = std::fs::read(&img).unwrap();
        std::fs::write(&img, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(
            read_idx(&img, IDX_IMAGES_MAGIC),
            Err(Error::Parse { .. })
        ));
        std::fs::write(&lab, [0u8, 0]).unwrap();
        assert!(matches!(
            read_idx(&lab, IDX_LABELS_MAGIC),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn obx_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        let ds = gen_syn(37, 4).unwrap();
        ds.save(&p).unwrap();
        let back = Dataset::load(&p).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"OBX1");
        assert_eq!(bytes.len(), 12 + 37 * 2 * 8 + 37);
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(Dataset::load(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn sampling_is_seeded_and_sorted() {
        let ds = gen_syn(100, 0).unwrap();
        let a = ds.sample_indices(10, 3);
        assert_eq!(a, ds.sample_indices(10, 3));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ds.sample_indices(500, 3).len(), 100);
    }

    proptest! {
        #[test]
        fn idx_round_trip(dims in prop::collection::vec(1u32..5, 1..4), seed in any::<u64>()) {
            let len: usize = dims.iter().map(|&d| d as usize).product();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<u8> = (0..len).map(|_| rand::Rng::gen(&mut rng)).collect();
            let t = IdxTensor { dims: dims.clone(), data };
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.idx");
            write_idx(&p, &t).unwrap();
            let magic = 0x0800 | dims.len() as u32;
            prop_assert_eq!(read_idx(&p, magic).unwrap(), t);
        }
    }
}
