//! The interpretation model: one local linear classifier per configuration
//! observed in a dataset.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedform::{fold_configuration, LocalLinearClassifier};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::netcore::{Configuration, Network};
use crate::polytope::{build_polytope, BoundingBox};

/// Example instance ids kept per entry.
pub const MAX_EXAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub llc: LocalLinearClassifier,
    pub support: usize,
    pub examples: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpenBoxOptions {
    /// Leave redundancy flags unset; only the exactness checks need this.
    pub skip_redundancy: bool,
    /// Box for redundancy removal; defaults to the data's box.
    pub bbox: Option<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationModel {
    fingerprint: String,
    processed: usize,
    #[serde(default)]
    skipped: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bbox: Option<BoundingBox>,
    #[serde(with = "entry_list")]
    entries: BTreeMap<Configuration, ModelEntry>,
}

/// Folds `c` and builds its polytope, pruned against `bbox` when given.
pub fn build_llc(
    net: &Network,
    c: &Configuration,
    bbox: Option<&BoundingBox>,
) -> Result<LocalLinearClassifier> {
    let prefixes = fold_configuration(net, c)?;
    let mut polytope = build_polytope(net, &prefixes, c)?;
    if let Some(b) = bbox {
        polytope = polytope.remove_redundant(b)?;
    }
    let last = prefixes.into_iter().last().expect("at least one prefix");
    Ok(LocalLinearClassifier {
        configuration: c.clone(),
        w_hat: last.w_hat,
        b_hat: last.b_hat,
        polytope,
    })
}

/// Builds the model over every instance of `data`.
///
/// Configurations are computed in parallel and grouped in index order, so
/// the result does not depend on the thread count.
pub fn openbox(
    net: &Network,
    data: &Dataset,
    opts: &OpenBoxOptions,
) -> Result<InterpretationModel> {
    if data.dim() != net.input_dim() && !data.is_empty() {
        return Err(Error::dim("dataset instance", net.input_dim(), data.dim()));
    }
    let confs: Vec<Result<Configuration>> = (0..data.len())
        .into_par_iter()
        .map(|i| net.conf(data.row(i)))
        .collect();

    let mut groups: BTreeMap<Configuration, (usize, Vec<usize>)> = BTreeMap::new();
    let mut skipped = Vec::new();
    for (i, c) in confs.into_iter().enumerate() {
        match c {
            Ok(c) => {
                let g = groups.entry(c).or_insert((0, Vec::new()));
                g.0 += 1;
                if g.1.len() < MAX_EXAMPLES {
                    g.1.push(i);
                }
            }
            Err(e) => {
                log::warn!("skipping instance {i}: {e}");
                skipped.push(i);
            }
        }
    }

    let bbox = if opts.skip_redundancy {
        None
    } else {
        match &opts.bbox {
            Some(b) => Some(b.clone()),
            None if data.is_empty() => None,
            None => Some(BoundingBox::from_data(data.rows())?),
        }
    };
    let keys: Vec<Configuration> = groups.keys().cloned().collect();
    let llcs: Vec<LocalLinearClassifier> = keys
        .par_iter()
        .map(|c| build_llc(net, c, bbox.as_ref()))
        .collect::<Result<_>>()?;

    let entries = groups
        .into_iter()
        .zip(llcs)
        .map(|((c, (support, examples)), llc)| {
            (
                c,
                ModelEntry {
                    llc,
                    support,
                    examples,
                },
            )
        })
        .collect();
    Ok(InterpretationModel {
        fingerprint: net.fingerprint(),
        processed: data.len() - skipped.len(),
        skipped,
        bbox,
        entries,
    })
}

impl InterpretationModel {
    pub fn empty(net: &Network, bbox: Option<BoundingBox>) -> Self {
        InterpretationModel {
            fingerprint: net.fingerprint(),
            processed: 0,
            skipped: Vec::new(),
            bbox,
            entries: BTreeMap::new(),
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Instances counted into some entry's support.
    pub fn processed(&self) -> usize {
        self.processed
    }

    /// Dataset indices rejected during enumeration.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    pub fn bbox(&self) -> Option<&BoundingBox> {
        self.bbox.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<Configuration, ModelEntry> {
        &self.entries
    }

    pub fn get(&self, c: &Configuration) -> Option<&ModelEntry> {
        self.entries.get(c)
    }

    /// Entries by descending support, ties by configuration order.
    pub fn by_support(&self) -> Vec<&ModelEntry> {
        let mut v: Vec<&ModelEntry> = self.entries.values().collect();
        v.sort_by_key(|e| std::cmp::Reverse(e.support));
        v
    }

    pub fn check_fresh(&self, net: &Network) -> Result<()> {
        let current = net.fingerprint();
        if current != self.fingerprint {
            return Err(Error::StaleModel {
                model: self.fingerprint.clone(),
                network: current,
            });
        }
        Ok(())
    }

    /// Counts `x` as the next instance, inserting its LLC if unseen.
    pub fn update(&mut self, net: &Network, x: &[f64]) -> Result<&ModelEntry> {
        self.check_fresh(net)?;
        let c = net.conf(x)?;
        let id = self.processed + self.skipped.len();
        if !self.entries.contains_key(&c) {
            let llc = build_llc(net, &c, self.bbox.as_ref())?;
            self.entries.insert(
                c.clone(),
                ModelEntry {
                    llc,
                    support: 0,
                    examples: Vec::new(),
                },
            );
        }
        self.processed += 1;
        let entry = self.entries.get_mut(&c).expect("inserted above");
        entry.support += 1;
        if entry.examples.len() < MAX_EXAMPLES {
            entry.examples.push(id);
        }
        Ok(entry)
    }

    /// The LLC governing `x`, folded on the fly (without redundancy flags)
    /// when its configuration is not in the model. The model is unchanged.
    pub fn lookup<'a>(
        &'a self,
        net: &Network,
        x: &[f64],
    ) -> Result<Cow<'a, LocalLinearClassifier>> {
        self.check_fresh(net)?;
        self.llc_for(net, x)
    }

    /// [`lookup`](Self::lookup) without the fingerprint check, for callers
    /// that already verified the model against `net`.
    pub fn llc_for<'a>(
        &'a self,
        net: &Network,
        x: &[f64],
    ) -> Result<Cow<'a, LocalLinearClassifier>> {
        let c = net.conf(x)?;
        match self.entries.get(&c) {
            Some(e) => Ok(Cow::Borrowed(&e.llc)),
            None => Ok(Cow::Owned(build_llc(net, &c, None)?)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            format!("at `{path}`: {}", e.into_inner())
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = Self::from_json(&text).map_err(|m| Error::parse(path, m))?;
        for (c, e) in &model.entries {
            if e.llc.configuration != *c {
                return Err(Error::parse(path, format!("entry key mismatch for {c}")));
            }
        }
        Ok(model)
    }
}

mod entry_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::ModelEntry;
    use crate::netcore::Configuration;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<Configuration, ModelEntry>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Configuration, ModelEntry>, D::Error> {
        let list = Vec::<ModelEntry>::deserialize(d)?;
        Ok(list
            .into_iter()
            .map(|e| (e.llc.configuration.clone(), e))
            .collect())
    }
}
