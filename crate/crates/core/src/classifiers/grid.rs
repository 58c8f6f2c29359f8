use serde::{Deserialize, Serialize};

use super::{Family, ForestParams, KnnParams, MlpParams, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnGrid {
    pub k: Vec<usize>,
}

impl Default for KnnGrid {
    fn default() -> Self {
        Self { k: vec![1, 3, 5, 11, 21] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestGrid {
    pub trees: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
    pub features_per_split: Vec<Option<usize>>,
    pub bootstrap: Vec<bool>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        Self {
            trees: vec![50, 100, 200],
            max_depth: vec![Some(8), Some(16), None],
            min_samples_leaf: vec![1],
            features_per_split: vec![None],
            bootstrap: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpGrid {
    pub hidden: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub epochs: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub momentum: Vec<f64>,
}

impl Default for MlpGrid {
    fn default() -> Self {
        Self {
            hidden: vec![32, 64, 128],
            learning_rate: vec![0.01, 0.001],
            epochs: vec![60],
            batch_size: vec![32],
            momentum: vec![0.9],
        }
    }
}

/// Candidate hyperparameters per family. Expansion order is row-major with
/// the first listed field outermost, which is also the tie-break order of the
/// grid search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub knn: KnnGrid,
    pub random_forest: ForestGrid,
    pub mlp: MlpGrid,
}

pub fn default_grid() -> HyperGrid {
    HyperGrid::default()
}

impl HyperGrid {
    pub fn configs(&self, family: Family) -> Vec<ModelConfig> {
        match family {
            Family::Knn => self.knn.k.iter().map(|&k| ModelConfig::Knn(KnnParams { k })).collect(),
            Family::RandomForest => {
                let g = &self.random_forest;
                let mut out = Vec::new();
                for &n_trees in &g.trees {
                    for &max_depth in &g.max_depth {
                        for &min_samples_leaf in &g.min_samples_leaf {
                            for &features_per_split in &g.features_per_split {
                                for &bootstrap in &g.bootstrap {
                                    out.push(ModelConfig::RandomForest(ForestParams {
                                        n_trees,
                                        max_depth,
                                        min_samples_leaf,
                                        features_per_split,
                                        bootstrap,
                                    }));
                                }
                            }
                        }
                    }
                }
                out
            }
            Family::Mlp => {
                let g = &self.mlp;
                let mut out = Vec::new();
                for &hidden in &g.hidden {
                    for &learning_rate in &g.learning_rate {
                        for &epochs in &g.epochs {
                            for &batch_size in &g.batch_size {
                                for &momentum in &g.momentum {
                                    out.push(ModelConfig::Mlp(MlpParams {
                                        hidden,
                                        learning_rate,
                                        epochs,
                                        batch_size,
                                        momentum,
                                    }));
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Families whose grid expands to nothing.
    pub fn empty_families(&self) -> Vec<Family> {
        Family::ALL.into_iter().filter(|&f| self.configs(f).is_empty()).collect()
    }

    /// A grid holding exactly one configuration for `family`, leaving the
    /// other families at their defaults.
    pub fn single(config: &ModelConfig) -> HyperGrid {
        let mut g = HyperGrid::default();
        match config {
            ModelConfig::Knn(p) => g.knn.k = vec![p.k],
            ModelConfig::RandomForest(p) => {
                g.random_forest = ForestGrid {
                    trees: vec![p.n_trees],
                    max_depth: vec![p.max_depth],
                    min_samples_leaf: vec![p.min_samples_leaf],
                    features_per_split: vec![p.features_per_split],
                    bootstrap: vec![p.bootstrap],
                }
            }
            ModelConfig::Mlp(p) => {
                g.mlp = MlpGrid {
                    hidden: vec![p.hidden],
                    learning_rate: vec![p.learning_rate],
                    epochs: vec![p.epochs],
                    batch_size: vec![p.batch_size],
                    momentum: vec![p.momentum],
                }
            }
        }
        g
    }
}
