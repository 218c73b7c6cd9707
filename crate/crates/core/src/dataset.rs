//! Per-layer photodiode signal datasets: labeling, synthesis, disk I/O, and
//! undersampling.
//!
//! A build is a stack of layers. Most are fully scanned bulk layers; a few
//! blocks of consecutive layers are deliberately left unexposed so that the
//! layers printed right above them overhang loose powder and overheat. The
//! three layers after an unexposed block of length ≥ 2 carry the
//! `Anomalous` label; remelting erases the effect of a single-layer block,
//! so those produce no anomalies. Unexposed layers themselves are immune to
//! overheating and stay `Nominal`.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{par, seeds};

/// Whether a layer was fully laser-scanned or sits inside an unexposed block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerType {
    Bulk,
    UnexposedBlock,
}

/// Ground-truth layer class; `Anomalous` marks overheating.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Nominal,
    Anomalous,
}

impl ClassLabel {
    /// Index into per-class arrays: Nominal = 0, Anomalous = 1.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Nominal => 0,
            ClassLabel::Anomalous => 1,
        }
    }

    pub const ALL: [ClassLabel; 2] = [ClassLabel::Nominal, ClassLabel::Anomalous];
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Nominal => write!(f, "nominal"),
            ClassLabel::Anomalous => write!(f, "anomalous"),
        }
    }
}

impl fmt::Display for LayerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerType::Bulk => write!(f, "bulk"),
            LayerType::UnexposedBlock => write!(f, "unexposed_block"),
        }
    }
}

/// One build layer: its raw photodiode samples plus type and class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub layer_index: usize,
    pub samples: Vec<f64>,
    pub layer_type: LayerType,
    pub class_label: ClassLabel,
}

impl LayerRecord {
    /// Build a record, validating the invariants: non-empty samples, all
    /// finite and ≥ 0, and unexposed-block layers labeled nominal.
    pub fn new(
        layer_index: usize,
        samples: Vec<f64>,
        layer_type: LayerType,
        class_label: ClassLabel,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Record {
                layer: layer_index,
                reason: "empty sample sequence".into(),
            });
        }
        for (i, &s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::Record {
                    layer: layer_index,
                    reason: format!("non-finite sample at position {i}"),
                });
            }
            if s < 0.0 {
                return Err(Error::Record {
                    layer: layer_index,
                    reason: format!("negative sample {s} at position {i}"),
                });
            }
        }
        if layer_type == LayerType::UnexposedBlock && class_label == ClassLabel::Anomalous {
            return Err(Error::Record {
                layer: layer_index,
                reason: "unexposed block layer labeled anomalous".into(),
            });
        }
        Ok(Self {
            layer_index,
            samples,
            layer_type,
            class_label,
        })
    }
}

/// A run of consecutive unexposed layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start_layer: usize,
    pub length: usize,
}

/// Placement of the unexposed blocks inside a build.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub blocks: Vec<Block>,
    pub total_layers: usize,
}

impl BlockLayout {
    /// Check ordering, disjointness, and that every block of length ≥ 2
    /// leaves room for its three overheated layers before the build end and
    /// before the next block.
    pub fn validate(&self) -> Result<()> {
        if self.total_layers == 0 {
            return Err(Error::Config("layout has zero layers".into()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let err = |reason: String| Error::Layout { block: i, reason };
            if b.length == 0 {
                return Err(err("zero-length block".into()));
            }
            let end = b.start_layer + b.length;
            if end > self.total_layers {
                return Err(err(format!(
                    "block [{}, {}) exceeds build of {} layers",
                    b.start_layer, end, self.total_layers
                )));
            }
            let label_end = if b.length >= 2 { end + 3 } else { end };
            if label_end > self.total_layers {
                return Err(err(format!(
                    "overheated layers [{end}, {label_end}) exceed build of {} layers",
                    self.total_layers
                )));
            }
            if let Some(next) = self.blocks.get(i + 1) {
                if next.start_layer < b.start_layer {
                    return Err(err("blocks not sorted by start layer".into()));
                }
                if next.start_layer < label_end {
                    return Err(err(format!(
                        "block ending at {end} collides with block starting at {} \
                         (layers [{end}, {label_end}) must stay bulk)",
                        next.start_layer
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-layer `(type, class)` assignment for a block layout.
///
/// Layers inside blocks are `(UnexposedBlock, Nominal)`; the three layers
/// after a block of length ≥ 2 are `(Bulk, Anomalous)`; everything else is
/// `(Bulk, Nominal)`.
pub fn derive_labels(layout: &BlockLayout) -> Result<Vec<(LayerType, ClassLabel)>> {
    layout.validate()?;
    let mut labels = vec![(LayerType::Bulk, ClassLabel::Nominal); layout.total_layers];
    for b in &layout.blocks {
        for l in labels.iter_mut().skip(b.start_layer).take(b.length) {
            *l = (LayerType::UnexposedBlock, ClassLabel::Nominal);
        }
        if b.length >= 2 {
            let end = b.start_layer + b.length;
            for l in labels.iter_mut().skip(end).take(3) {
                *l = (LayerType::Bulk, ClassLabel::Anomalous);
            }
        }
    }
    Ok(labels)
}

/// Parameters of the per-sample intensity model shared by all layers.
///
/// Within a layer, samples are log-normal. Each layer draws its own latent
/// process state: a location offset (`layer_sigma`), a width factor
/// (`sigma_jitter`), and a spatter rate factor (`spike_jitter`). The
/// location offset spreads the per-layer means of the two classes into
/// overlapping clouds; the width and spatter jitters give the nominal class
/// genuine spread in the quantile features, so an elevated upper tail is
/// ambiguous between a wide nominal layer and a mildly overheated one. The
/// spatter component (`spike_fraction` of samples, shifted by
/// `spike_shift`) keeps the per-layer maximum noisy in both classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    /// Location of the log-normal baseline (log of detector units).
    pub log_mean: f64,
    /// Within-layer log-scale spread.
    pub log_sigma: f64,
    /// Standard deviation of the per-layer location offset.
    pub layer_sigma: f64,
    /// Log-scale spread of the per-layer width factor.
    pub sigma_jitter: f64,
    /// Fraction of samples drawn from the spatter component.
    pub spike_fraction: f64,
    /// Log-scale spread of the per-layer spatter rate factor.
    pub spike_jitter: f64,
    /// Location shift (log scale) of the spatter component.
    pub spike_shift: f64,
}

/// Inclusive integer range for per-layer signal lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthRange {
    pub min: usize,
    pub max: usize,
}

impl LengthRange {
    fn validate(&self, what: &str) -> Result<()> {
        if self.min == 0 || self.max < self.min {
            return Err(Error::Config(format!(
                "{what} signal length range [{}, {}] is empty or non-positive",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, len: usize) -> bool {
        (self.min..=self.max).contains(&len)
    }
}

/// Severity decay of the overheating cascade across the three layers after
/// a block: the first overhanging layer overheats fully, the effect fades
/// until normalcy returns at the fourth.
const CASCADE_DECAY: [f64; 3] = [1.0, 0.6, 0.35];

/// Log-scale spread of the per-layer severity factor; some anomalies end up
/// barely distinguishable from wide nominal layers.
const SEVERITY_JITTER: f64 = 0.4;

/// Configuration of the synthetic benchmark generator.
///
/// Anomalous layers mix `anomaly_tail_fraction` of elevated-intensity
/// samples into the nominal distribution; the realized fraction of a given
/// layer is scaled by the cascade decay for its position after the block and
/// by a per-layer severity factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub total_layers: usize,
    /// Lengths of the unexposed blocks, placed in the given order.
    pub block_lengths: Vec<usize>,
    pub bulk_signal_length_range: LengthRange,
    pub block_signal_length_range: LengthRange,
    pub nominal_distribution: SignalModel,
    /// Mixture weight of the elevated-intensity component in anomalous layers.
    pub anomaly_tail_fraction: f64,
    /// Location shift (log scale) of that component.
    pub anomaly_shift: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            total_layers: 379,
            block_lengths: (1..=10).collect(),
            bulk_signal_length_range: LengthRange {
                min: 30_339,
                max: 31_135,
            },
            block_signal_length_range: LengthRange {
                min: 9_560,
                max: 9_726,
            },
            nominal_distribution: SignalModel {
                log_mean: 7.0,
                log_sigma: 0.35,
                layer_sigma: 0.05,
                sigma_jitter: 0.10,
                spike_fraction: 0.002,
                spike_jitter: 0.5,
                spike_shift: 1.8,
            },
            anomaly_tail_fraction: 0.2,
            anomaly_shift: 0.85,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_lengths.is_empty() {
            return Err(Error::Config("no unexposed blocks configured".into()));
        }
        if self.block_lengths.contains(&0) {
            return Err(Error::Config("zero-length unexposed block".into()));
        }
        self.bulk_signal_length_range.validate("bulk")?;
        self.block_signal_length_range.validate("block")?;
        if !(self.anomaly_tail_fraction > 0.0 && self.anomaly_tail_fraction < 1.0) {
            return Err(Error::Config(format!(
                "anomaly_tail_fraction {} outside (0, 1)",
                self.anomaly_tail_fraction
            )));
        }
        let m = &self.nominal_distribution;
        for (name, v) in [
            ("log_mean", m.log_mean),
            ("log_sigma", m.log_sigma),
            ("layer_sigma", m.layer_sigma),
            ("sigma_jitter", m.sigma_jitter),
            ("spike_fraction", m.spike_fraction),
            ("spike_jitter", m.spike_jitter),
            ("spike_shift", m.spike_shift),
            ("anomaly_shift", self.anomaly_shift),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("non-finite {name}")));
            }
        }
        if m.log_sigma <= 0.0 || m.layer_sigma < 0.0 || m.sigma_jitter < 0.0 || m.spike_jitter < 0.0
        {
            return Err(Error::Config("non-positive signal spread".into()));
        }
        if !(0.0..1.0).contains(&m.spike_fraction) {
            return Err(Error::Config("spike_fraction outside [0, 1)".into()));
        }
        self.layout()?.validate()
    }

    /// Block placement: blocks in the configured order, separated by gaps of
    /// bulk layers as equal as possible, so post-block anomalous triples
    /// never reach the next block.
    pub fn layout(&self) -> Result<BlockLayout> {
        let unexposed: usize = self.block_lengths.iter().sum();
        let n_blocks = self.block_lengths.len();
        let spare = self.total_layers.checked_sub(unexposed).ok_or_else(|| {
            Error::Config(format!(
                "{} total layers cannot hold {unexposed} unexposed layers",
                self.total_layers
            ))
        })?;
        // One gap after each block; the leading bulk section reuses the gap size.
        let base = spare / (n_blocks + 1);
        let mut extra = spare % (n_blocks + 1);
        if base < 3 {
            return Err(Error::Config(format!(
                "{} total layers leave gaps of {base} < 3 layers between blocks",
                self.total_layers
            )));
        }
        let mut gap = |size: usize| {
            let bump = usize::from(extra > 0);
            extra = extra.saturating_sub(1);
            size + bump
        };
        let mut blocks = Vec::with_capacity(n_blocks);
        let mut cursor = gap(base);
        for &length in &self.block_lengths {
            blocks.push(Block {
                start_layer: cursor,
                length,
            });
            cursor += length + gap(base);
        }
        debug_assert_eq!(cursor, self.total_layers);
        Ok(BlockLayout {
            blocks,
            total_layers: self.total_layers,
        })
    }
}

/// Draw one layer's samples. `tail_base` is zero for nominal layers and the
/// cascade-decayed mixture weight for anomalous ones.
///
/// Draw order is fixed (length, four latent normals, then per sample a
/// component pick and a normal) so that a layer's content depends only on
/// its own stream. The severity draw happens for every layer, keeping
/// nominal and zero-tail layers bitwise identical.
fn sample_layer(
    rng: &mut ChaCha8Rng,
    length_range: LengthRange,
    model: &SignalModel,
    tail_base: f64,
    anomaly_shift: f64,
) -> Vec<f64> {
    let len = rng.random_range(length_range.min..=length_range.max);
    let z_loc: f64 = StandardNormal.sample(rng);
    let z_width: f64 = StandardNormal.sample(rng);
    let z_spike: f64 = StandardNormal.sample(rng);
    let z_severity: f64 = StandardNormal.sample(rng);
    let loc = model.log_mean + model.layer_sigma * z_loc;
    let sigma = model.log_sigma * (model.sigma_jitter * z_width).exp();
    let spike = (model.spike_fraction * (model.spike_jitter * z_spike).exp()).min(0.1);
    let tail = (tail_base * (SEVERITY_JITTER * z_severity).exp()).min(0.45);
    (0..len)
        .map(|_| {
            let u: f64 = rng.random();
            let z: f64 = StandardNormal.sample(rng);
            let shift = if u < spike {
                model.spike_shift
            } else if u < spike + tail {
                anomaly_shift
            } else {
                0.0
            };
            (loc + shift + sigma * z).exp()
        })
        .collect()
}

/// Per-layer mixture weight before severity jitter: zero everywhere except
/// the overheated triples, which decay with distance from their block.
fn tail_plan(config: &GeneratorConfig, layout: &BlockLayout) -> Vec<f64> {
    let mut plan = vec![0.0; layout.total_layers];
    for b in &layout.blocks {
        if b.length >= 2 {
            let end = b.start_layer + b.length;
            for (k, decay) in CASCADE_DECAY.iter().enumerate() {
                if let Some(slot) = plan.get_mut(end + k) {
                    *slot = config.anomaly_tail_fraction * decay;
                }
            }
        }
    }
    plan
}

/// Synthesize a benchmark replica: `config.total_layers` records whose labels
/// match [`derive_labels`] on the generated layout. Deterministic given
/// `(config, seed)`; each layer draws from its own stream.
pub fn generate_benchmark(config: &GeneratorConfig, seed: u64) -> Result<Vec<LayerRecord>> {
    config.validate()?;
    let layout = config.layout()?;
    let labels = derive_labels(&layout)?;
    let tails = tail_plan(config, &layout);
    par::map_range(labels.len(), |i| {
        let (layer_type, class_label) = labels[i];
        let mut rng = seeds::rng(seed, "layer-signal", i as u64);
        let range = match layer_type {
            LayerType::UnexposedBlock => config.block_signal_length_range,
            LayerType::Bulk => config.bulk_signal_length_range,
        };
        let samples = sample_layer(
            &mut rng,
            range,
            &config.nominal_distribution,
            tails[i],
            config.anomaly_shift,
        );
        LayerRecord::new(i, samples, layer_type, class_label)
    })
    .into_iter()
    .collect()
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    layers: Vec<ManifestLayer>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLayer {
    index: usize,
    file: String,
    layer_type: LayerType,
    class_label: ClassLabel,
}

/// Write records as a dataset directory: `manifest.json` plus one plain-text
/// signal file per layer, one decimal per line.
pub fn save_dataset(records: &[LayerRecord], dir: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("no records to save"));
    }
    fs::create_dir_all(dir)?;
    let mut layers = Vec::with_capacity(records.len());
    for r in records {
        let file = format!("layer_{:05}.txt", r.layer_index);
        let mut out = Vec::with_capacity(r.samples.len() * 8);
        for s in &r.samples {
            // `{}` prints the shortest representation that round-trips.
            writeln!(&mut out, "{s}").expect("write to vec");
        }
        fs::write(dir.join(&file), out)?;
        layers.push(ManifestLayer {
            index: r.layer_index,
            file,
            layer_type: r.layer_type,
            class_label: r.class_label,
        });
    }
    let manifest = serde_json::to_vec_pretty(&Manifest { layers })?;
    fs::write(dir.join("manifest.json"), manifest)?;
    Ok(())
}

/// Load a dataset directory written by [`save_dataset`] (or any third-party
/// adapter producing the same manifest format). Records come back in
/// manifest order with all invariants validated.
pub fn load_dataset(dir: &Path) -> Result<Vec<LayerRecord>> {
    let manifest_path = dir.join("manifest.json");
    let raw = fs::read(&manifest_path).map_err(|e| {
        Error::Manifest(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: Manifest =
        serde_json::from_slice(&raw).map_err(|e| Error::Manifest(format!("invalid JSON: {e}")))?;
    if manifest.layers.is_empty() {
        return Err(Error::Manifest("manifest lists no layers".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for l in &manifest.layers {
        if !seen.insert(l.index) {
            return Err(Error::Manifest(format!("duplicate layer index {}", l.index)));
        }
    }
    manifest
        .layers
        .iter()
        .map(|entry| {
            let path = dir.join(&entry.file);
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(Error::MissingSignal {
                        layer: entry.index,
                        path,
                    })
                }
                Err(e) => return Err(e.into()),
            };
            let mut samples = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let token = line.trim();
                let parse_err = || Error::SignalParse {
                    path: path.clone(),
                    line: lineno + 1,
                    token: token.to_string(),
                };
                let value: f64 = token.parse().map_err(|_| parse_err())?;
                // f64::from_str accepts "NaN" and "inf"; those are malformed here.
                if !value.is_finite() {
                    return Err(parse_err());
                }
                samples.push(value);
            }
            LayerRecord::new(entry.index, samples, entry.layer_type, entry.class_label)
        })
        .collect()
}

/// Indices of the balanced undersampled subset: every anomalous record plus
/// an equally sized seeded random subset of the bulk-nominal records.
/// Unexposed block layers are excluded. Returned sorted by position.
pub fn undersample_indices(records: &[LayerRecord], seed: u64) -> Result<Vec<usize>> {
    let anomalous: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.class_label == ClassLabel::Anomalous)
        .map(|(i, _)| i)
        .collect();
    let mut bulk_nominal: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.class_label == ClassLabel::Nominal && r.layer_type == LayerType::Bulk
        })
        .map(|(i, _)| i)
        .collect();
    if bulk_nominal.len() < anomalous.len() {
        return Err(Error::Insufficient(format!(
            "{} bulk-nominal records cannot match {} anomalous records",
            bulk_nominal.len(),
            anomalous.len()
        )));
    }
    let mut rng = seeds::rng(seed, "undersample", 0);
    // Seeded partial Fisher-Yates: the first n_anomalous entries are a
    // uniform subset.
    for i in 0..anomalous.len() {
        let j = rng.random_range(i..bulk_nominal.len());
        bulk_nominal.swap(i, j);
    }
    let mut keep: Vec<usize> = anomalous
        .iter()
        .chain(bulk_nominal.iter().take(anomalous.len()))
        .copied()
        .collect();
    keep.sort_unstable();
    Ok(keep)
}

/// Balanced undersampled copy of the dataset (see [`undersample_indices`]).
pub fn undersample_nominal(records: &[LayerRecord], seed: u64) -> Result<Vec<LayerRecord>> {
    let keep = undersample_indices(records, seed)?;
    Ok(keep.into_iter().map(|i| records[i].clone()).collect())
}
