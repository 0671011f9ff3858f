//! The graph classification model: sum aggregation of neighbor embeddings,
//! a combine step that both concatenates and sums the ego- and
//! neighbor-embeddings, skip concatenation of every layer's output, and a
//! readout that sorts nodes by their final embeddings and concatenates the
//! rows zero-padded to a common size. Gradients are exact and hand-derived.

use std::io::{BufRead, Write};
use std::ops::Range;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::{softmax_cross_entropy, Matrix, Mlp, MlpCache, MlpParamGrads, Parameterized};
use crate::scalar::Scalar;

/// Model variants: the full design plus the four ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Combine `[self || neigh || self+neigh]`, concatenate all layers,
    /// sorted zero-padded concatenation readout.
    Full,
    /// Drop the summed branch: combine `[self || neigh]`.
    NoIntegration,
    /// Drop the separated branches: combine `[self+neigh]`.
    NoSeparation,
    /// Use only the last layer's embeddings instead of all layers.
    NoIntermediate,
    /// Sum node embeddings instead of the sorted concatenation.
    SumReadout,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoIntegration,
        Variant::NoSeparation,
        Variant::NoIntermediate,
        Variant::SumReadout,
    ];

    /// Width of the combine input as a multiple of the embedding dim.
    pub fn combine_width_factor(self) -> usize {
        match self {
            Variant::NoIntegration => 2,
            Variant::NoSeparation => 1,
            _ => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoIntegration => "no_integration",
            Variant::NoSeparation => "no_separation",
            Variant::NoIntermediate => "no_intermediate",
            Variant::SumReadout => "sum_readout",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "full" => Ok(Variant::Full),
            "no_integration" => Ok(Variant::NoIntegration),
            "no_separation" => Ok(Variant::NoSeparation),
            "no_intermediate" => Ok(Variant::NoIntermediate),
            "sum_readout" => Ok(Variant::SumReadout),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

/// Hyperparameters and dataset-derived dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct IhgnnConfig {
    pub num_layers: usize,
    pub embed_dim: usize,
    pub classifier_hidden: usize,
    pub dropout: f64,
    /// Apply dropout inside the embed/combine MLPs too, not only in the
    /// classifier head. Off by default.
    pub combine_dropout: bool,
    pub batch_size: usize,
    pub epochs: usize,
    /// Common padded node count; at least the largest graph in the data.
    pub pad_size: usize,
    pub num_classes: usize,
    pub num_features: usize,
    pub variant: Variant,
    pub seed: u64,
    pub learning_rate: f64,
    pub lr_halve_every: usize,
    /// Sum neighbor aggregates and readout sums in value order instead of
    /// node order, making logits bit-identical under node permutations.
    pub deterministic_reduction: bool,
}

impl IhgnnConfig {
    /// Paper-protocol defaults with the dimensions left to fill in.
    pub fn defaults() -> IhgnnConfig {
        IhgnnConfig {
            num_layers: 3,
            embed_dim: 32,
            classifier_hidden: 128,
            dropout: 0.5,
            combine_dropout: false,
            batch_size: 32,
            epochs: 350,
            pad_size: 1,
            num_classes: 2,
            num_features: 1,
            variant: Variant::Full,
            seed: 1,
            learning_rate: 0.01,
            lr_halve_every: 50,
            deterministic_reduction: false,
        }
    }

    /// Defaults with `pad_size`, `num_classes`, and `num_features` taken
    /// from the dataset.
    pub fn for_dataset(d: &crate::graph::Dataset) -> IhgnnConfig {
        IhgnnConfig {
            pad_size: d.max_nodes(),
            num_classes: d.num_classes(),
            num_features: d.num_node_labels(),
            ..IhgnnConfig::defaults()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers < 1 {
            return Err(Error::Config("num_layers must be at least 1".into()));
        }
        if self.embed_dim == 0 || self.classifier_hidden == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.num_classes == 0 || self.num_features == 0 {
            return Err(Error::Config("num_classes and num_features must be positive".into()));
        }
        if self.pad_size == 0 {
            return Err(Error::Config("pad_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0,1)", self.dropout)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be positive".into()));
        }
        Ok(())
    }

    /// Width of one node's embedding after the layer stack.
    pub fn node_embedding_dim(&self) -> usize {
        match self.variant {
            Variant::NoIntermediate => self.embed_dim,
            _ => self.num_layers * self.embed_dim,
        }
    }

    /// Length of the graph embedding fed to the classifier.
    pub fn readout_dim(&self) -> usize {
        match self.variant {
            Variant::SumReadout => self.node_embedding_dim(),
            _ => self.pad_size * self.node_embedding_dim(),
        }
    }

    /// Flat `key=value` rendering, one field per line, fixed order.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        push("num_layers", self.num_layers.to_string());
        push("embed_dim", self.embed_dim.to_string());
        push("classifier_hidden", self.classifier_hidden.to_string());
        push("dropout", self.dropout.to_string());
        push("combine_dropout", self.combine_dropout.to_string());
        push("batch_size", self.batch_size.to_string());
        push("epochs", self.epochs.to_string());
        push("pad_size", self.pad_size.to_string());
        push("num_classes", self.num_classes.to_string());
        push("num_features", self.num_features.to_string());
        push("variant", self.variant.to_string());
        push("seed", self.seed.to_string());
        push("learning_rate", self.learning_rate.to_string());
        push("lr_halve_every", self.lr_halve_every.to_string());
        push("deterministic_reduction", self.deterministic_reduction.to_string());
        s
    }

    /// Parses the `key=value` format produced by [`IhgnnConfig::to_kv`].
    pub fn from_kv(text: &str) -> Result<IhgnnConfig> {
        let mut cfg = IhgnnConfig::defaults();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |e: String| Error::Config(format!("line {}: {key}: {e}", lineno + 1));
            match key {
                "num_layers" => cfg.num_layers = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "embed_dim" => cfg.embed_dim = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "classifier_hidden" => cfg.classifier_hidden = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "dropout" => cfg.dropout = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "combine_dropout" => cfg.combine_dropout = value.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?,
                "batch_size" => cfg.batch_size = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "epochs" => cfg.epochs = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "pad_size" => cfg.pad_size = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "num_classes" => cfg.num_classes = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "num_features" => cfg.num_features = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "variant" => cfg.variant = value.parse()?,
                "seed" => cfg.seed = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "learning_rate" => cfg.learning_rate = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "lr_halve_every" => cfg.lr_halve_every = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "deterministic_reduction" => cfg.deterministic_reduction = value.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?,
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(cfg)
    }
}

/// One graph's final embedding along with how it was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEmbedding<T> {
    pub values: Vec<T>,
    pub node_order: Vec<usize>,
    pub num_real_nodes: usize,
}

/// One training example.
#[derive(Clone, Copy)]
pub struct BatchItem<'a, T> {
    pub graph: &'a Graph,
    pub features: &'a Matrix<T>,
    pub label: usize,
}

/// Row `v` of the result is the sum of `h`'s rows over `v`'s neighbors.
/// This is `A * h` for the 0/1 adjacency matrix. With `deterministic`
/// set, each entry sums its terms in value order so the result does not
/// depend on node numbering.
pub fn aggregate_neighbors<T: Scalar>(
    g: &Graph,
    h: &Matrix<T>,
    deterministic: bool,
) -> Result<Matrix<T>> {
    if h.rows() != g.num_nodes() {
        return Err(Error::ShapeMismatch {
            op: "aggregate_neighbors",
            lhs_rows: h.rows(),
            lhs_cols: h.cols(),
            rhs_rows: g.num_nodes(),
            rhs_cols: g.num_nodes(),
        });
    }
    let mut out = Matrix::zeros(h.rows(), h.cols());
    if deterministic {
        let mut terms: Vec<T> = Vec::new();
        for v in 0..g.num_nodes() {
            let row = out.row_mut(v);
            for j in 0..h.cols() {
                terms.clear();
                terms.extend(g.neighbors(v).iter().map(|&u| h.get(u, j)));
                terms.sort_by(|a, b| a.total_order(b));
                row[j] = terms.iter().copied().fold(T::zero(), |a, b| a + b);
            }
        }
    } else {
        for v in 0..g.num_nodes() {
            for &u in g.neighbors(v) {
                let src = h.row(u);
                for (d, &s) in out.row_mut(v).iter_mut().zip(src) {
                    *d = *d + s;
                }
            }
        }
    }
    Ok(out)
}

/// Per-variant combine input built from the ego rows and the aggregated
/// neighbor rows.
pub fn combine<T: Scalar>(
    h_self: &Matrix<T>,
    h_neigh: &Matrix<T>,
    variant: Variant,
) -> Result<Matrix<T>> {
    if h_self.rows() != h_neigh.rows() || h_self.cols() != h_neigh.cols() {
        return Err(Error::ShapeMismatch {
            op: "combine",
            lhs_rows: h_self.rows(),
            lhs_cols: h_self.cols(),
            rhs_rows: h_neigh.rows(),
            rhs_cols: h_neigh.cols(),
        });
    }
    match variant {
        Variant::NoIntegration => Matrix::hconcat(&[h_self, h_neigh]),
        Variant::NoSeparation => h_self.add(h_neigh),
        _ => {
            let sum = h_self.add(h_neigh)?;
            Matrix::hconcat(&[h_self, h_neigh, &sum])
        }
    }
}

/// Ascending node order whose primary key is the last-layer block of each
/// row (`last_block` columns, first dimension first) with the full row as
/// the tie-break. Stable: equal rows keep their index order.
pub fn sort_nodes_by_color<T: Scalar>(h: &Matrix<T>, last_block: Range<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..h.rows()).collect();
    order.sort_by(|&a, &b| {
        let ra = h.row(a);
        let rb = h.row(b);
        for j in last_block.clone() {
            match ra[j].total_order(&rb[j]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        for j in 0..h.cols() {
            match ra[j].total_order(&rb[j]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    order
}

/// Concatenates the rows of `h_sorted` and appends `(m - n)` zero rows.
pub fn pad_and_flatten<T: Scalar>(h_sorted: &Matrix<T>, m: usize) -> Result<Vec<T>> {
    if h_sorted.rows() > m {
        return Err(Error::Config(format!(
            "graph with {} nodes exceeds the padded size {m}",
            h_sorted.rows()
        )));
    }
    let mut out = Vec::with_capacity(m * h_sorted.cols());
    out.extend_from_slice(h_sorted.values());
    out.resize(m * h_sorted.cols(), T::zero());
    Ok(out)
}

/// Per-graph trace kept for the backward pass.
struct GraphTrace<T> {
    embed_cache: MlpCache<T>,
    combine_caches: Vec<MlpCache<T>>,
    perm: Vec<usize>,
    num_nodes: usize,
}

/// The model: an embedding MLP, one combine MLP per additional layer, and
/// the classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct IhgnnModel<T> {
    embed: Mlp<T>,
    combines: Vec<Mlp<T>>,
    classifier: Mlp<T>,
    variant: Variant,
    num_layers: usize,
    embed_dim: usize,
    pad_size: usize,
}

/// Gradients for every model parameter, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads<T> {
    pub embed: MlpParamGrads<T>,
    pub combines: Vec<MlpParamGrads<T>>,
    pub classifier: MlpParamGrads<T>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn zeros_like(model: &IhgnnModel<T>) -> ModelGrads<T> {
        ModelGrads {
            embed: MlpParamGrads::zeros_like(&model.embed),
            combines: model.combines.iter().map(MlpParamGrads::zeros_like).collect(),
            classifier: MlpParamGrads::zeros_like(&model.classifier),
        }
    }

    pub fn add_assign(&mut self, other: &ModelGrads<T>) -> Result<()> {
        self.embed.add_assign(&other.embed)?;
        for (a, b) in self.combines.iter_mut().zip(&other.combines) {
            a.add_assign(b)?;
        }
        self.classifier.add_assign(&other.classifier)
    }

    pub fn scale(&mut self, factor: T) {
        self.embed.scale(factor);
        for c in &mut self.combines {
            c.scale(factor);
        }
        self.classifier.scale(factor);
    }

    /// Flat gradient slices in the model's parameter slot order.
    pub fn slots(&self) -> Vec<&[T]> {
        let mut out = self.embed.slots();
        for c in &self.combines {
            out.extend(c.slots());
        }
        out.extend(self.classifier.slots());
        out
    }
}

impl<T: Scalar> IhgnnModel<T> {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn init(config: &IhgnnConfig, rng: &mut impl Rng) -> Result<IhgnnModel<T>> {
        config.validate()?;
        let r = config.embed_dim;
        let embed = Mlp::glorot(config.num_features, r, r, rng);
        let combines = (1..config.num_layers)
            .map(|_| Mlp::glorot(config.variant.combine_width_factor() * r, r, r, rng))
            .collect();
        let classifier = Mlp::glorot(
            config.readout_dim(),
            config.classifier_hidden,
            config.num_classes,
            rng,
        );
        Ok(IhgnnModel {
            embed,
            combines,
            classifier,
            variant: config.variant,
            num_layers: config.num_layers,
            embed_dim: r,
            pad_size: config.pad_size,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn pad_size(&self) -> usize {
        self.pad_size
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.output_dim()
    }

    pub fn num_features(&self) -> usize {
        self.embed.input_dim()
    }

    fn check_input(&self, g: &Graph, x: &Matrix<T>) -> Result<()> {
        if g.num_nodes() > self.pad_size {
            return Err(Error::Config(format!(
                "graph with {} nodes exceeds the padded size {}",
                g.num_nodes(),
                self.pad_size
            )));
        }
        if x.rows() != g.num_nodes() || x.cols() != self.embed.input_dim() {
            return Err(Error::ShapeMismatch {
                op: "forward",
                lhs_rows: x.rows(),
                lhs_cols: x.cols(),
                rhs_rows: g.num_nodes(),
                rhs_cols: self.embed.input_dim(),
            });
        }
        Ok(())
    }

    /// Runs the layer stack and readout for one graph, returning the graph
    /// embedding and the trace needed for the backward pass.
    fn trace_graph(
        &self,
        g: &Graph,
        x: &Matrix<T>,
        config: &IhgnnConfig,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<(GraphEmbedding<T>, GraphTrace<T>)> {
        self.check_input(g, x)?;
        let mlp_dropout = if config.combine_dropout { config.dropout } else { 0.0 };
        let (h1, embed_cache) = self.embed.forward(x, mlp_dropout, training, rng)?;
        let mut layers = vec![h1];
        let mut combine_caches = Vec::with_capacity(self.combines.len());
        for mlp in &self.combines {
            let prev = layers.last().expect("at least the embed layer");
            let agg = aggregate_neighbors(g, prev, config.deterministic_reduction)?;
            let cin = combine(prev, &agg, self.variant)?;
            let (hk, cache) = mlp.forward(&cin, mlp_dropout, training, rng)?;
            layers.push(hk);
            combine_caches.push(cache);
        }
        let hcat = match self.variant {
            Variant::NoIntermediate => layers.last().expect("nonempty").clone(),
            _ => {
                let refs: Vec<&Matrix<T>> = layers.iter().collect();
                Matrix::hconcat(&refs)?
            }
        };
        let n = g.num_nodes();
        let embedding = match self.variant {
            Variant::SumReadout => {
                let values = if config.deterministic_reduction {
                    let mut out = vec![T::zero(); hcat.cols()];
                    let mut terms: Vec<T> = Vec::with_capacity(n);
                    for (j, slot) in out.iter_mut().enumerate() {
                        terms.clear();
                        terms.extend((0..n).map(|v| hcat.get(v, j)));
                        terms.sort_by(|a, b| a.total_order(b));
                        *slot = terms.iter().copied().fold(T::zero(), |a, b| a + b);
                    }
                    out
                } else {
                    hcat.sum_rows().into_values()
                };
                GraphEmbedding {
                    values,
                    node_order: (0..n).collect(),
                    num_real_nodes: n,
                }
            }
            _ => {
                let width = hcat.cols();
                let last_block = width - self.embed_dim..width;
                let perm = sort_nodes_by_color(&hcat, last_block);
                let mut sorted = Matrix::zeros(n, width);
                for (pos, &v) in perm.iter().enumerate() {
                    sorted.row_mut(pos).copy_from_slice(hcat.row(v));
                }
                GraphEmbedding {
                    values: pad_and_flatten(&sorted, self.pad_size)?,
                    node_order: perm,
                    num_real_nodes: n,
                }
            }
        };
        let perm = embedding.node_order.clone();
        Ok((
            embedding,
            GraphTrace {
                embed_cache,
                combine_caches,
                perm,
                num_nodes: n,
            },
        ))
    }

    /// Graph embedding with dropout disabled; the readout half of the
    /// forward pass.
    pub fn embed_graph(&self, g: &Graph, x: &Matrix<T>, config: &IhgnnConfig) -> Result<GraphEmbedding<T>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (embedding, _) = self.trace_graph(g, x, config, false, &mut rng)?;
        Ok(embedding)
    }

    /// Full forward pass for one graph.
    pub fn forward(
        &self,
        g: &Graph,
        x: &Matrix<T>,
        config: &IhgnnConfig,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<(Vec<T>, GraphEmbedding<T>)> {
        let (embedding, _) = self.trace_graph(g, x, config, training, rng)?;
        let stacked = Matrix::from_vec(1, embedding.values.len(), embedding.values.clone());
        let (logits, _) = self.classifier.forward(&stacked, config.dropout, training, rng)?;
        Ok((logits.row(0).to_vec(), embedding))
    }

    /// Predicted class indices for a batch, dropout disabled.
    pub fn predict(&self, items: &[BatchItem<'_, T>], config: &IhgnnConfig) -> Result<Vec<usize>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut stacked = Matrix::zeros(items.len(), self.classifier.input_dim());
        for (i, item) in items.iter().enumerate() {
            let (embedding, _) = self.trace_graph(item.graph, item.features, config, false, &mut rng)?;
            stacked.row_mut(i).copy_from_slice(&embedding.values);
        }
        let (logits, _) = self.classifier.forward(&stacked, 0.0, false, &mut rng)?;
        Ok((0..items.len())
            .map(|i| crate::nn::loss::argmax_row(logits.row(i)))
            .collect())
    }

    /// Mean cross-entropy of the batch with dropout disabled; the
    /// deterministic loss used by gradient checking.
    pub fn batch_loss(&self, items: &[BatchItem<'_, T>], config: &IhgnnConfig) -> Result<T> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut stacked = Matrix::zeros(items.len(), self.classifier.input_dim());
        let mut labels = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let (embedding, _) = self.trace_graph(item.graph, item.features, config, false, &mut rng)?;
            stacked.row_mut(i).copy_from_slice(&embedding.values);
            labels.push(item.label);
        }
        let (logits, _) = self.classifier.forward(&stacked, 0.0, false, &mut rng)?;
        let (loss, _) = softmax_cross_entropy(&logits, &labels)?;
        Ok(loss)
    }

    /// Mean cross-entropy over the batch plus exact gradients for every
    /// parameter. Dropout (per `config`) is active; pass `dropout = 0`
    /// for deterministic gradients.
    pub fn loss_and_gradients(
        &self,
        items: &[BatchItem<'_, T>],
        config: &IhgnnConfig,
        rng: &mut impl Rng,
    ) -> Result<(T, ModelGrads<T>)> {
        if items.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let mut traces = Vec::with_capacity(items.len());
        let mut stacked = Matrix::zeros(items.len(), self.classifier.input_dim());
        let mut labels = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let (embedding, trace) = self.trace_graph(item.graph, item.features, config, true, rng)?;
            stacked.row_mut(i).copy_from_slice(&embedding.values);
            labels.push(item.label);
            traces.push(trace);
        }
        let (logits, clf_cache) = self.classifier.forward(&stacked, config.dropout, true, rng)?;
        let (loss, dlogits) = softmax_cross_entropy(&logits, &labels)?;
        let (clf_grads, dstacked) = self.classifier.backward(&clf_cache, &dlogits)?;

        let mut grads = ModelGrads::zeros_like(self);
        grads.classifier = clf_grads;
        for (i, (item, trace)) in items.iter().zip(&traces).enumerate() {
            self.backward_graph(item.graph, trace, dstacked.row(i), &mut grads, config)?;
        }
        Ok((loss, grads))
    }

    /// Routes the gradient of one graph's readout vector back through the
    /// readout, the layer concatenation, and the layer stack.
    fn backward_graph(
        &self,
        g: &Graph,
        trace: &GraphTrace<T>,
        dreadout: &[T],
        grads: &mut ModelGrads<T>,
        config: &IhgnnConfig,
    ) -> Result<()> {
        let n = trace.num_nodes;
        let node_dim = match self.variant {
            Variant::NoIntermediate => self.embed_dim,
            _ => self.num_layers * self.embed_dim,
        };
        // Gradient w.r.t. the concatenated per-node embeddings. Padding
        // rows receive nothing; the sort permutation is a constant of the
        // forward pass.
        let mut dh = Matrix::zeros(n, node_dim);
        match self.variant {
            Variant::SumReadout => {
                for v in 0..n {
                    dh.row_mut(v).copy_from_slice(dreadout);
                }
            }
            _ => {
                for (pos, &v) in trace.perm.iter().enumerate() {
                    dh.row_mut(v)
                        .copy_from_slice(&dreadout[pos * node_dim..(pos + 1) * node_dim]);
                }
            }
        }

        // Per-layer upstream gradients.
        let r = self.embed_dim;
        let mut dlayers: Vec<Matrix<T>> = match self.variant {
            Variant::NoIntermediate => {
                let mut v = vec![Matrix::zeros(n, r); self.num_layers];
                v[self.num_layers - 1] = dh;
                v
            }
            _ => (0..self.num_layers)
                .map(|k| extract_block(&dh, k * r..(k + 1) * r))
                .collect(),
        };

        for k in (1..self.num_layers).rev() {
            let upstream = dlayers[k].clone();
            let (mlp_grads, dcin) = self.combines[k - 1].backward(&trace.combine_caches[k - 1], &upstream)?;
            grads.combines[k - 1].add_assign(&mlp_grads)?;
            let (dself, dneigh) = match self.variant {
                Variant::NoIntegration => (
                    extract_block(&dcin, 0..r),
                    extract_block(&dcin, r..2 * r),
                ),
                Variant::NoSeparation => (dcin.clone(), dcin),
                _ => {
                    let dsum = extract_block(&dcin, 2 * r..3 * r);
                    let mut dself = extract_block(&dcin, 0..r);
                    dself.add_assign(&dsum)?;
                    let mut dneigh = extract_block(&dcin, r..2 * r);
                    dneigh.add_assign(&dsum)?;
                    (dself, dneigh)
                }
            };
            // d/dH of A*H is A^T * upstream; A is symmetric.
            let routed = aggregate_neighbors(g, &dneigh, config.deterministic_reduction)?;
            dlayers[k - 1].add_assign(&dself)?;
            dlayers[k - 1].add_assign(&routed)?;
        }

        let (embed_grads, _) = self.embed.backward(&trace.embed_cache, &dlayers[0])?;
        grads.embed.add_assign(&embed_grads)
    }

    pub fn param_slot_lens(&self) -> Vec<usize> {
        let mut lens = self.embed.param_slot_lens();
        for c in &self.combines {
            lens.extend(c.param_slot_lens());
        }
        lens.extend(self.classifier.param_slot_lens());
        lens
    }

    pub fn param_slots_mut(&mut self) -> Vec<&mut [T]> {
        let mut slots = self.embed.param_slots_mut();
        for c in &mut self.combines {
            slots.extend(c.param_slots_mut());
        }
        slots.extend(self.classifier.param_slots_mut());
        slots
    }

    /// Writes the versioned textual checkpoint: a dimensions header, then
    /// each tensor as `tensor <name> <rows> <cols>` followed by one line of
    /// values per row. Values round-trip exactly.
    pub fn save_checkpoint(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "ihgnn-checkpoint v1")?;
        writeln!(w, "variant {}", self.variant)?;
        writeln!(w, "num_layers {}", self.num_layers)?;
        writeln!(w, "embed_dim {}", self.embed_dim)?;
        writeln!(w, "pad_size {}", self.pad_size)?;
        writeln!(w, "num_classes {}", self.num_classes())?;
        writeln!(w, "num_features {}", self.num_features())?;
        let dump = |w: &mut dyn Write, name: String, mlp: &Mlp<T>| -> std::io::Result<()> {
            write_tensor(w, &format!("{name}.w1"), &mlp.w1)?;
            write_vector(w, &format!("{name}.b1"), &mlp.b1)?;
            write_tensor(w, &format!("{name}.w2"), &mlp.w2)?;
            write_vector(w, &format!("{name}.b2"), &mlp.b2)
        };
        dump(w, "embed".into(), &self.embed)?;
        for (i, c) in self.combines.iter().enumerate() {
            dump(w, format!("combine{i}"), c)?;
        }
        dump(w, "classifier".into(), &self.classifier)
    }

    /// Reads a checkpoint written by [`IhgnnModel::save_checkpoint`].
    pub fn load_checkpoint(r: impl BufRead) -> Result<IhgnnModel<T>> {
        let mut lines = r.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(line))) => Ok((i + 1, line)),
                Some((i, Err(e))) => Err(Error::format("checkpoint", i + 1, e.to_string())),
                None => Err(Error::format("checkpoint", 0, format!("missing {what}"))),
            }
        };
        let (line_no, header) = next_line("header")?;
        if header.trim() != "ihgnn-checkpoint v1" {
            return Err(Error::format("checkpoint", line_no, "unsupported header"));
        }
        let mut field = |name: &str| -> Result<String> {
            let (line_no, line) = next_line(name)?;
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::format("checkpoint", line_no, "expected 'key value'"))?;
            if key != name {
                return Err(Error::format(
                    "checkpoint",
                    line_no,
                    format!("expected field '{name}', found '{key}'"),
                ));
            }
            Ok(value.trim().to_string())
        };
        let variant: Variant = field("variant")?.parse()?;
        let parse_usize = |s: String| -> Result<usize> {
            s.parse()
                .map_err(|e: std::num::ParseIntError| Error::format("checkpoint", 0, e.to_string()))
        };
        let num_layers = parse_usize(field("num_layers")?)?;
        let embed_dim = parse_usize(field("embed_dim")?)?;
        let pad_size = parse_usize(field("pad_size")?)?;
        let _num_classes = parse_usize(field("num_classes")?)?;
        let _num_features = parse_usize(field("num_features")?)?;

        let mut read_mlp = |name: &str| -> Result<Mlp<T>> {
            let w1 = read_tensor(&mut lines, &format!("{name}.w1"))?;
            let b1 = read_tensor(&mut lines, &format!("{name}.b1"))?;
            let w2 = read_tensor(&mut lines, &format!("{name}.w2"))?;
            let b2 = read_tensor(&mut lines, &format!("{name}.b2"))?;
            Ok(Mlp {
                w1,
                b1: b1.into_values(),
                w2,
                b2: b2.into_values(),
            })
        };
        let embed = read_mlp("embed")?;
        let mut combines = Vec::with_capacity(num_layers.saturating_sub(1));
        for i in 0..num_layers.saturating_sub(1) {
            combines.push(read_mlp(&format!("combine{i}"))?);
        }
        let classifier = read_mlp("classifier")?;
        Ok(IhgnnModel {
            embed,
            combines,
            classifier,
            variant,
            num_layers,
            embed_dim,
            pad_size,
        })
    }
}

impl<T: Scalar> Parameterized<T> for IhgnnModel<T> {
    fn param_slots(&mut self) -> Vec<&mut [T]> {
        self.param_slots_mut()
    }
}

fn extract_block<T: Scalar>(m: &Matrix<T>, cols: Range<usize>) -> Matrix<T> {
    let mut out = Matrix::zeros(m.rows(), cols.len());
    for i in 0..m.rows() {
        out.row_mut(i).copy_from_slice(&m.row(i)[cols.clone()]);
    }
    out
}

fn write_tensor<T: Scalar>(w: &mut dyn Write, name: &str, m: &Matrix<T>) -> std::io::Result<()> {
    writeln!(w, "tensor {name} {} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

fn write_vector<T: Scalar>(w: &mut dyn Write, name: &str, v: &[T]) -> std::io::Result<()> {
    writeln!(w, "tensor {name} 1 {}", v.len())?;
    let row: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    writeln!(w, "{}", row.join(" "))
}

fn read_tensor<T: Scalar>(
    lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>,
    expected_name: &str,
) -> Result<Matrix<T>> {
    let (line_no, header) = match lines.next() {
        Some((i, Ok(line))) => (i + 1, line),
        Some((i, Err(e))) => return Err(Error::format("checkpoint", i + 1, e.to_string())),
        None => {
            return Err(Error::format(
                "checkpoint",
                0,
                format!("missing tensor {expected_name}"),
            ))
        }
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "tensor" || parts[1] != expected_name {
        return Err(Error::format(
            "checkpoint",
            line_no,
            format!("expected 'tensor {expected_name} <rows> <cols>'"),
        ));
    }
    let rows: usize = parts[2]
        .parse()
        .map_err(|_| Error::format("checkpoint", line_no, "bad row count"))?;
    let cols: usize = parts[3]
        .parse()
        .map_err(|_| Error::format("checkpoint", line_no, "bad column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line_no, line) = match lines.next() {
            Some((i, Ok(line))) => (i + 1, line),
            Some((i, Err(e))) => return Err(Error::format("checkpoint", i + 1, e.to_string())),
            None => return Err(Error::format("checkpoint", 0, "truncated tensor")),
        };
        let mut count = 0;
        for token in line.split_whitespace() {
            let value = token
                .parse::<T>()
                .map_err(|_| Error::format("checkpoint", line_no, format!("bad value '{token}'")))?;
            data.push(value);
            count += 1;
        }
        if count != cols {
            return Err(Error::format(
                "checkpoint",
                line_no,
                format!("expected {cols} values, found {count}"),
            ));
        }
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fig2_pair, random_graph, random_permutation};
    use crate::graph::{one_hot_features, Dataset};
    use crate::nn::grad_check;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn m64(rows: usize, cols: usize, data: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(rows, cols, data.to_vec())
    }

    #[test]
    fn aggregate_of_edgeless_graph_is_zero() {
        let g = Graph::new(3, vec![0; 3], &[]).unwrap();
        let h = m64(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let agg = aggregate_neighbors(&g, &h, false).unwrap();
        assert!(agg.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn aggregate_on_a_path_swaps_rows() {
        let g = Graph::new(2, vec![0, 0], &[(0, 1)]).unwrap();
        let h = m64(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let agg = aggregate_neighbors(&g, &h, false).unwrap();
        assert_eq!(agg.row(0), &[0.0, 1.0]);
        assert_eq!(agg.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn aggregate_on_a_triangle_sums_the_other_rows() {
        let g = Graph::new(3, vec![0; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let h = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let agg = aggregate_neighbors(&g, &h, false).unwrap();
        assert_eq!(agg.row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(agg.row(1), &[1.0, 0.0, 1.0]);
        assert_eq!(agg.row(2), &[1.0, 1.0, 0.0]);
        // And it agrees with the dense product A * H.
        let dense = g.adjacency::<f64>().matmul(&h).unwrap();
        assert_eq!(agg, dense);
    }

    #[test]
    fn aggregate_shape_mismatch_is_an_error() {
        let g = Graph::new(3, vec![0; 3], &[(0, 1)]).unwrap();
        let h = Matrix::<f64>::zeros(2, 4);
        assert!(aggregate_neighbors(&g, &h, false).is_err());
    }

    #[test]
    fn combine_widths_and_layout_per_variant() {
        let h_self = m64(1, 2, &[1.0, 0.0]);
        let h_neigh = m64(1, 2, &[0.0, 2.0]);
        let full = combine(&h_self, &h_neigh, Variant::Full).unwrap();
        assert_eq!(full.row(0), &[1.0, 0.0, 0.0, 2.0, 1.0, 2.0]);
        let sep = combine(&h_self, &h_neigh, Variant::NoIntegration).unwrap();
        assert_eq!(sep.row(0), &[1.0, 0.0, 0.0, 2.0]);
        let int = combine(&h_self, &h_neigh, Variant::NoSeparation).unwrap();
        assert_eq!(int.row(0), &[1.0, 2.0]);

        let zero = Matrix::<f64>::zeros(2, 3);
        for variant in Variant::ALL {
            let c = combine(&zero, &zero, variant).unwrap();
            assert_eq!(c.cols(), variant.combine_width_factor() * 3);
            assert!(c.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn summed_branch_collapses_swapped_pairs() {
        // (1,0)+(0,1) and (0,1)+(1,0) agree after summation, so the
        // integration-only variant cannot tell them apart; the full
        // variant keeps them distinct.
        let a_self = m64(1, 2, &[1.0, 0.0]);
        let a_neigh = m64(1, 2, &[0.0, 1.0]);
        let b_self = m64(1, 2, &[0.0, 1.0]);
        let b_neigh = m64(1, 2, &[1.0, 0.0]);
        let int_a = combine(&a_self, &a_neigh, Variant::NoSeparation).unwrap();
        let int_b = combine(&b_self, &b_neigh, Variant::NoSeparation).unwrap();
        assert_eq!(int_a, int_b);
        let full_a = combine(&a_self, &a_neigh, Variant::Full).unwrap();
        let full_b = combine(&b_self, &b_neigh, Variant::Full).unwrap();
        assert_ne!(full_a, full_b);
    }

    #[test]
    fn sort_orders_by_last_layer_block_first() {
        // One layer of width 1: rows (3), (1), (2).
        let h = m64(3, 1, &[3.0, 1.0, 2.0]);
        assert_eq!(sort_nodes_by_color(&h, 0..1), vec![1, 2, 0]);

        // All rows identical: stable sort keeps index order.
        let h = m64(3, 2, &[5.0, 5.0, 5.0, 5.0, 5.0, 5.0]);
        assert_eq!(sort_nodes_by_color(&h, 1..2), vec![0, 1, 2]);

        // Tie on the last block, broken by the first (layer-1) block.
        let h = m64(2, 2, &[9.0, 4.0, 1.0, 4.0]);
        assert_eq!(sort_nodes_by_color(&h, 1..2), vec![1, 0]);
    }

    #[test]
    fn pad_and_flatten_appends_zero_rows() {
        let h = m64(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = pad_and_flatten(&h, 5).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(&v[..6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(v[6..].iter().all(|&x| x == 0.0));

        let exact = pad_and_flatten(&h, 3).unwrap();
        assert_eq!(exact, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        let zeros = pad_and_flatten(&Matrix::<f64>::zeros(2, 2), 4).unwrap();
        assert!(zeros.iter().all(|&x| x == 0.0));

        assert!(pad_and_flatten(&h, 2).is_err());
    }

    fn small_config(variant: Variant) -> IhgnnConfig {
        IhgnnConfig {
            num_layers: 3,
            embed_dim: 4,
            classifier_hidden: 8,
            dropout: 0.0,
            pad_size: 8,
            num_classes: 2,
            num_features: 3,
            variant,
            ..IhgnnConfig::defaults()
        }
    }

    fn graph_and_features(seed: u64, n: usize) -> (Graph, Matrix<f64>) {
        let mut r = rng(seed);
        let g = random_graph(n, 0.5, 3, &mut r);
        let mut x = Matrix::zeros(n, 3);
        for v in 0..n {
            x.set(v, g.label(v), 1.0);
        }
        (g, x)
    }

    #[test]
    fn single_node_graph_produces_finite_logits() {
        let config = small_config(Variant::Full);
        let model = IhgnnModel::<f64>::init(&config, &mut rng(1)).unwrap();
        let g = Graph::new(1, vec![2], &[]).unwrap();
        let x = m64(1, 3, &[0.0, 0.0, 1.0]);
        let (logits, embedding) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        assert_eq!(logits.len(), 2);
        assert!(logits.iter().all(|v| v.is_finite()));
        assert_eq!(embedding.values.len(), config.readout_dim());
        assert_eq!(embedding.num_real_nodes, 1);
    }

    #[test]
    fn graph_larger_than_pad_size_is_a_config_error() {
        let mut config = small_config(Variant::Full);
        config.pad_size = 3;
        let model = IhgnnModel::<f64>::init(&config, &mut rng(1)).unwrap();
        let (g, x) = graph_and_features(5, 6);
        assert!(matches!(
            model.forward(&g, &x, &config, false, &mut rng(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn embedding_dimension_contract_per_variant() {
        for variant in Variant::ALL {
            let config = small_config(variant);
            let model = IhgnnModel::<f64>::init(&config, &mut rng(2)).unwrap();
            let (g, x) = graph_and_features(7, 5);
            let embedding = model.embed_graph(&g, &x, &config).unwrap();
            assert_eq!(embedding.values.len(), config.readout_dim(), "{variant}");
            if !matches!(variant, Variant::SumReadout) {
                let node_dim = config.node_embedding_dim();
                let tail = &embedding.values[embedding.num_real_nodes * node_dim..];
                assert!(tail.iter().all(|&v| v == 0.0), "{variant}: padding not zero");
            }
        }
    }

    #[test]
    fn logits_are_invariant_under_node_permutation() {
        for variant in Variant::ALL {
            let config = small_config(variant);
            let model = IhgnnModel::<f64>::init(&config, &mut rng(3)).unwrap();
            let (g, x) = graph_and_features(11, 7);
            let (logits, _) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
            let mut r = rng(13);
            for _ in 0..5 {
                let perm = random_permutation(7, &mut r);
                let gp = g.permuted(&perm).unwrap();
                let mut xp = Matrix::zeros(7, 3);
                for v in 0..7 {
                    xp.row_mut(perm[v]).copy_from_slice(x.row(v));
                }
                let (logits_p, _) = model.forward(&gp, &xp, &config, false, &mut rng(0)).unwrap();
                let scale = logits.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in logits.iter().zip(&logits_p) {
                    assert!((a - b).abs() / scale <= 1e-6, "{variant}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn deterministic_reduction_gives_exact_permutation_equality() {
        let mut config = small_config(Variant::Full);
        config.deterministic_reduction = true;
        let model = IhgnnModel::<f64>::init(&config, &mut rng(3)).unwrap();
        let (g, x) = graph_and_features(11, 7);
        let (logits, _) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        let mut r = rng(17);
        for _ in 0..5 {
            let perm = random_permutation(7, &mut r);
            let gp = g.permuted(&perm).unwrap();
            let mut xp = Matrix::zeros(7, 3);
            for v in 0..7 {
                xp.row_mut(perm[v]).copy_from_slice(x.row(v));
            }
            let (logits_p, _) = model.forward(&gp, &xp, &config, false, &mut rng(0)).unwrap();
            assert_eq!(logits, logits_p);
        }
    }

    #[test]
    fn padding_rows_never_reach_the_classifier() {
        // Rows of the classifier input weight matrix that correspond to
        // padding positions multiply exact zeros; scribbling over them
        // must not change the logits.
        let config = small_config(Variant::Full);
        let mut model = IhgnnModel::<f64>::init(&config, &mut rng(4)).unwrap();
        let (g, x) = graph_and_features(9, 5);
        let (before, _) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        let node_dim = config.node_embedding_dim();
        let first_pad_row = g.num_nodes() * node_dim;
        for row in first_pad_row..config.readout_dim() {
            for col in 0..model.classifier.hidden_dim() {
                model.classifier.w1.set(row, col, 1234.5 + row as f64);
            }
        }
        let (after, _) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn saturated_correct_prediction_has_vanishing_loss_and_gradients() {
        let config = small_config(Variant::Full);
        let mut model = IhgnnModel::<f64>::init(&config, &mut rng(5)).unwrap();
        // Force an enormous margin toward class 0 via the output bias.
        model.classifier.b2 = vec![200.0, -200.0];
        let (g, x) = graph_and_features(6, 5);
        let items = [BatchItem { graph: &g, features: &x, label: 0 }];
        let (loss, grads) = model
            .loss_and_gradients(&items, &config, &mut rng(0))
            .unwrap();
        assert!(loss < 1e-12);
        for slot in grads.slots() {
            assert!(slot.iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn duplicated_batch_has_identical_loss_and_gradients() {
        let config = small_config(Variant::Full);
        let model = IhgnnModel::<f64>::init(&config, &mut rng(6)).unwrap();
        let (g1, x1) = graph_and_features(8, 5);
        let (g2, x2) = graph_and_features(9, 6);
        let single = [
            BatchItem { graph: &g1, features: &x1, label: 0 },
            BatchItem { graph: &g2, features: &x2, label: 1 },
        ];
        let doubled = [
            BatchItem { graph: &g1, features: &x1, label: 0 },
            BatchItem { graph: &g2, features: &x2, label: 1 },
            BatchItem { graph: &g1, features: &x1, label: 0 },
            BatchItem { graph: &g2, features: &x2, label: 1 },
        ];
        let (loss_a, grads_a) = model.loss_and_gradients(&single, &config, &mut rng(0)).unwrap();
        let (loss_b, grads_b) = model.loss_and_gradients(&doubled, &config, &mut rng(0)).unwrap();
        assert!((loss_a - loss_b).abs() < 1e-12);
        for (a, b) in grads_a.slots().iter().zip(grads_b.slots()) {
            for (va, vb) in a.iter().zip(b.iter()) {
                assert!((va - vb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences_on_a_small_graph() {
        for variant in Variant::ALL {
            let config = small_config(variant);
            let mut model = IhgnnModel::<f64>::init(&config, &mut rng(21)).unwrap();
            let (g, x) = graph_and_features(22, 5);
            let items = [BatchItem { graph: &g, features: &x, label: 1 }];
            let (_, grads) = model
                .loss_and_gradients(&items, &config, &mut rng(0))
                .unwrap();
            let analytic: Vec<Vec<f64>> = grads.slots().iter().map(|s| s.to_vec()).collect();
            let report = grad_check(
                &mut model,
                |m| m.batch_loss(&items, &config).unwrap(),
                &analytic,
                1e-5,
                24,
            );
            assert!(
                report.max_rel_error <= 1e-4,
                "{variant}: {:?}",
                report
            );
        }
    }

    #[test]
    fn distinct_refinable_graphs_get_distinct_embeddings() {
        let (g1, g2) = fig2_pair();
        let d = Dataset::from_graphs("pair", vec![g1, g2], vec![0, 1]).unwrap();
        let features = one_hot_features::<f64>(&d);
        let mut config = small_config(Variant::Full);
        config.num_features = d.num_node_labels();
        config.pad_size = d.max_nodes();
        for seed in 0..5 {
            let model = IhgnnModel::<f64>::init(&config, &mut rng(seed)).unwrap();
            let e1 = model.embed_graph(d.graph(0), &features[0], &config).unwrap();
            let e2 = model.embed_graph(d.graph(1), &features[1], &config).unwrap();
            let max_diff = e1
                .values
                .iter()
                .zip(&e2.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(max_diff > 1e-6, "seed {seed}: embeddings coincide");
        }
    }

    #[test]
    fn single_layer_model_runs() {
        let mut config = small_config(Variant::Full);
        config.num_layers = 1;
        let model = IhgnnModel::<f64>::init(&config, &mut rng(2)).unwrap();
        let (g, x) = graph_and_features(3, 4);
        let (logits, embedding) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        assert_eq!(logits.len(), 2);
        assert_eq!(embedding.values.len(), config.pad_size * config.embed_dim);
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let config = small_config(Variant::NoIntegration);
        let model = IhgnnModel::<f64>::init(&config, &mut rng(30)).unwrap();
        let mut buf = Vec::new();
        model.save_checkpoint(&mut buf).unwrap();
        let restored = IhgnnModel::<f64>::load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(model, restored);
        let (g, x) = graph_and_features(31, 5);
        let (a, _) = model.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        let (b, _) = restored.forward(&g, &x, &config, false, &mut rng(0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_kv_round_trips() {
        let mut config = small_config(Variant::SumReadout);
        config.seed = 99;
        config.learning_rate = 0.004;
        config.deterministic_reduction = true;
        let text = config.to_kv();
        let back = IhgnnConfig::from_kv(&text).unwrap();
        assert_eq!(config, back);
        assert!(IhgnnConfig::from_kv("nonsense").is_err());
        assert!(IhgnnConfig::from_kv("epochs=abc").is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = small_config(Variant::Full);
        config.num_layers = 0;
        assert!(config.validate().is_err());
        let mut config = small_config(Variant::Full);
        config.dropout = 1.0;
        assert!(config.validate().is_err());
        let mut config = small_config(Variant::Full);
        config.pad_size = 0;
        assert!(config.validate().is_err());
    }
}
