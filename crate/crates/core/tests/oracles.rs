//! Classifiers and metrics checked against small, obviously correct
//! reference implementations.

use emopers::classifiers::{Classifier, ForestModel, ForestParams, KnnModel, MlpModel, Node};
use emopers::evaluation::{auc_binary, f1_macro, roc_auc_ovr, ConfusionMatrix};
use emopers::{seed, Matrix};
use rand::Rng;

fn random_matrix(rng: &mut impl Rng, n: usize, d: usize, integer: bool) -> Matrix {
    let data = (0..n * d)
        .map(|_| if integer { f64::from(rng.random_range(-3i32..=3)) } else { rng.random_range(-1.0..1.0) })
        .collect();
    Matrix::from_vec(n, d, data)
}

/// Full sort on squared distance, ties broken by training index, then a
/// plain vote with the lowest class winning ties.
fn brute_force_knn(x: &Matrix, y: &[usize], n_classes: usize, k: usize, q: &[f64]) -> usize {
    let mut d: Vec<(f64, usize)> = (0..x.rows())
        .map(|i| (x.row(i).iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &d[..k] {
        votes[y[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

#[test]
fn knn_matches_brute_force_on_200_instances() {
    let mut rng = seed::rng(0x6b6e6e);
    for instance in 0..200 {
        let n = rng.random_range(5..=500);
        let d = rng.random_range(1..=6);
        let n_classes = rng.random_range(2..=4);
        let k = [1, 3, 5][instance % 3];
        // Integer grids produce many equidistant neighbours.
        let integer = instance % 4 == 0;
        let x = random_matrix(&mut rng, n, d, integer);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let model = KnnModel::fit(&x, &y, n_classes, k).unwrap();
        let queries = random_matrix(&mut rng, 10, d, integer);
        for q in queries.iter_rows() {
            assert_eq!(model.predict_label(q), brute_force_knn(&x, &y, n_classes, k, q), "instance {instance}");
        }
    }
}

#[test]
fn knn_scores_are_vote_fractions() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0]], 1);
    let model = KnnModel::fit(&x, &[0, 1, 1, 0], 2, 3).unwrap();
    let s = model.predict_scores(&[1.1]);
    assert!((s[0] - 1.0 / 3.0).abs() < 1e-15 && (s[1] - 2.0 / 3.0).abs() < 1e-15);
}

fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let eps = 1e-5;
    let mut rng = seed::rng(0x6d6c70);
    for instance in 0..20 {
        let d = rng.random_range(2..=6);
        let h = rng.random_range(3..=8);
        let c = rng.random_range(2..=4);
        let n = rng.random_range(4..=12);
        let x = random_matrix(&mut rng, n, d, false);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let mut model = MlpModel::init(d, h, c, &mut rng);
        // Non-zero biases so that the output layer gradient is not trivial.
        let p: Vec<f64> = model.parameters().iter().map(|v| v + rng.random_range(-0.1..0.1)).collect();
        model = model.with_parameters(&p);

        let (_, grad) = model.loss_and_gradient(&x, &y);
        let analytic = grad.flatten();
        let base = model.parameters();
        let numeric: Vec<f64> = (0..base.len())
            .map(|i| {
                let mut up = base.clone();
                let mut down = base.clone();
                up[i] += eps;
                down[i] -= eps;
                (model.with_parameters(&up).loss(&x, &y) - model.with_parameters(&down).loss(&x, &y)) / (2.0 * eps)
            })
            .collect();
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "instance {instance}: relative error {err}");
    }
}

fn gini_weighted(labels: &[usize], n_classes: usize) -> f64 {
    let n = labels.len() as f64;
    if labels.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0.0; n_classes];
    for &l in labels {
        counts[l] += 1.0;
    }
    n * (1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>())
}

/// Every feature and every midpoint between distinct sorted values.
/// Returns `(children weighted impurity, set of optimal features)`.
fn exhaustive_best_split(x: &Matrix, y: &[usize], n_classes: usize) -> (f64, Vec<usize>) {
    let mut best = f64::INFINITY;
    let mut features = Vec::new();
    for f in 0..x.cols() {
        let mut values = x.column(f);
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = (0..x.rows()).partition(|&i| x.get(i, f) <= t);
            let lab = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
            let score = gini_weighted(&lab(&l), n_classes) + gini_weighted(&lab(&r), n_classes);
            if score < best - 1e-12 {
                best = score;
                features = vec![f];
            } else if (score - best).abs() <= 1e-12 && !features.contains(&f) {
                features.push(f);
            }
        }
    }
    (best, features)
}

fn children_impurity(tree: &emopers::classifiers::DecisionTree) -> (usize, f64) {
    let Node::Split { feature, left, right, .. } = &tree.nodes[0] else { panic!("root is a leaf") };
    let part = |i: usize| match &tree.nodes[i] {
        Node::Split { n_samples, impurity, .. } | Node::Leaf { n_samples, impurity, .. } => *n_samples as f64 * impurity,
    };
    (*feature, part(*left) + part(*right))
}

#[test]
fn single_tree_root_agrees_with_exhaustive_split_search() {
    let mut rng = seed::rng(0x74726565);
    for instance in 0..30 {
        let n = rng.random_range(6..=20);
        let d = rng.random_range(1..=4);
        let x = random_matrix(&mut rng, n, d, instance % 2 == 0);
        let y: Vec<usize> = (0..n).map(|i| if i < n / 2 { 0 } else { rng.random_range(0..3) }).collect();
        let n_classes = 3;
        let (best, features) = exhaustive_best_split(&x, &y, n_classes);
        if best.is_infinite() || (gini_weighted(&y, n_classes) - best) <= 1e-9 {
            continue;
        }
        let params = ForestParams {
            n_trees: 1,
            max_depth: Some(1),
            min_samples_leaf: 1,
            features_per_split: Some(d),
            bootstrap: false,
        };
        let forest = ForestModel::fit(&x, &y, n_classes, &params, instance as u64).unwrap();
        let (feature, children) = children_impurity(&forest.trees[0]);
        assert!((children - best).abs() < 1e-9, "instance {instance}: {children} vs {best}");
        assert!(features.contains(&feature), "instance {instance}");
    }
}

#[test]
fn planted_separating_feature_takes_the_importance() {
    let mut rng = seed::rng(0x706c616e74);
    for instance in 0..20 {
        let n = rng.random_range(8..=20);
        let d = 4;
        let planted = instance % d;
        let mut x = random_matrix(&mut rng, n, d, false);
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut rows: Vec<Vec<f64>> = x.iter_rows().map(<[f64]>::to_vec).collect();
        for (r, &label) in rows.iter_mut().zip(&y) {
            r[planted] = if label == 1 { rng.random_range(1.0..2.0) } else { rng.random_range(-2.0..-1.0) };
        }
        x = Matrix::from_rows(&rows, d);
        let (best, features) = exhaustive_best_split(&x, &y, 2);
        assert_eq!(best, 0.0);
        assert!(features.contains(&planted));
        let params =
            ForestParams { n_trees: 1, max_depth: None, min_samples_leaf: 1, features_per_split: Some(d), bootstrap: false };
        let forest = ForestModel::fit(&x, &y, 2, &params, 9).unwrap();
        let imp = forest.importances().unwrap();
        assert!(features.len() > 1 || imp.normalized[planted] >= 0.99, "instance {instance}: {:?}", imp.normalized);
        assert!((imp.normalized.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn forest_importances_sum_to_one() {
    let mut rng = seed::rng(0x73756d);
    for instance in 0..10 {
        let x = random_matrix(&mut rng, 120, 5, false);
        let y: Vec<usize> = x.iter_rows().map(|r| usize::from(r[0] + 0.3 * r[1] > 0.0)).collect();
        let params = ForestParams { n_trees: 15, max_depth: Some(6), ..ForestParams::default() };
        let imp = ForestModel::fit(&x, &y, 2, &params, instance).unwrap().importances().unwrap();
        assert!((imp.normalized.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(imp.normalized.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn macro_f1_fixture() {
    let cm = ConfusionMatrix::new(vec![vec![8, 2], vec![3, 7]]);
    // class 0: p = 8/11, r = 8/10; class 1: p = 7/9, r = 7/10
    let f0 = 2.0 * (8.0 / 11.0) * 0.8 / (8.0 / 11.0 + 0.8);
    let f1 = 2.0 * (7.0 / 9.0) * 0.7 / (7.0 / 9.0 + 0.7);
    assert!((f1_macro(&cm) - (f0 + f1) / 2.0).abs() < 1e-12);
    assert!((f1_macro(&cm) - 0.74937).abs() < 1e-5);
}

/// Fraction of positive-negative pairs ranked correctly, ties counting half.
fn pairwise_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &pi) in positive.iter().enumerate() {
        for (j, &pj) in positive.iter().enumerate() {
            if pi && !pj {
                pairs += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / pairs
}

#[test]
fn auc_fixtures() {
    let positive = [false, false, true, true];
    assert_eq!(auc_binary(&[0.1, 0.4, 0.35, 0.8], &positive), Some(0.75));
    assert_eq!(auc_binary(&[0.3; 4], &positive), Some(0.5));
    assert_eq!(auc_binary(&[0.3, 0.4], &[true, true]), None);
}

#[test]
fn auc_matches_pairwise_count() {
    let mut rng = seed::rng(0x617563);
    for _ in 0..50 {
        let n = rng.random_range(2..60);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..8u8)) / 8.0).collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        positive[0] = true;
        positive[1] = false;
        let got = auc_binary(&scores, &positive).unwrap();
        assert!((got - pairwise_auc(&scores, &positive)).abs() < 1e-12);
    }
}

#[test]
fn ovr_auc_flags_absent_class() {
    let scores = vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.8, 0.0], vec![0.6, 0.4, 0.0]];
    let ovr = roc_auc_ovr(&scores, &[0, 1, 0], 3);
    assert_eq!(ovr.undefined, vec![2]);
    assert_eq!(ovr.per_class[0], Some(1.0));
    assert_eq!(ovr.macro_auc, Some(1.0));
}
