use anacomp::model::{
    norm_distance, support, tau_distance, Alphabet, Block, DyadicGrid, MeasureSpec, Norm, SubshiftFamily,
};

fn g(b: u32) -> DyadicGrid {
    DyadicGrid::new(b).unwrap()
}

fn block(v: &[f64], b: u32) -> Block {
    Block::new(v.to_vec(), g(b)).unwrap()
}

#[test]
fn norm_distance_examples() {
    let d = norm_distance(&block(&[0.0, 0.0], 1), &block(&[1.0, 1.0], 1), Norm::Inf).unwrap();
    assert_eq!(d, 1.0);
    let d = norm_distance(&block(&[1.0, 0.0], 1), &block(&[0.0, 0.0], 1), Norm::P(1.0)).unwrap();
    assert_eq!(d, 0.5);
    assert!(norm_distance(&block(&[1.0], 1), &block(&[0.0, 0.0], 1), Norm::Inf).is_err());
}

#[test]
fn tau_examples() {
    let x = [0.3, 0.5, 0.7];
    assert_eq!(tau_distance(&x, &x).unwrap(), 0.0);
    assert_eq!(tau_distance(&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]).unwrap(), 1.0);
    assert_eq!(tau_distance(&[1.0; 5], &[0.0; 5]).unwrap(), 2.5);
    assert!(tau_distance(&[0.0; 4], &[0.0; 4]).is_err());
}

#[test]
fn support_examples() {
    assert!(support(&[0.0, 0.0, 0.0]).is_empty());
    assert_eq!(support(&[0.5, 0.0, 0.25]), vec![0, 2]);
    let words = SubshiftFamily::sparse(4, 1).enumerate_words(4, g(3), 1 << 20).unwrap();
    assert!(words.iter().all(|w| w.support_size() <= 1));
}

#[test]
fn contains_examples() {
    let s = SubshiftFamily::sparse(4, 1);
    assert!(s.contains(&block(&[0.5, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0], 2)));
    assert!(!s.contains(&block(&[0.5, 0.25, 0.0, 0.0], 2)));
    assert!(SubshiftFamily::full_binary().contains(&block(&[0.0, 1.0, 1.0, 0.0], 1)));
    assert!(!SubshiftFamily::full_binary().contains(&block(&[0.0, 0.5], 1)));
}

#[test]
fn enumerate_examples() {
    assert_eq!(SubshiftFamily::full_binary().enumerate_words(3, g(2), 100).unwrap().len(), 8);
    assert_eq!(SubshiftFamily::sparse(4, 1).enumerate_words(4, g(2), 100).unwrap().len(), 17);
    let five: Vec<Vec<f64>> = SubshiftFamily::sparse(2, 1)
        .enumerate_words(2, g(1), 100)
        .unwrap()
        .into_iter()
        .map(Block::into_values)
        .collect();
    assert_eq!(five.len(), 5);
    for w in [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.0, 0.5], [0.0, 1.0]] {
        assert!(five.contains(&w.to_vec()));
    }
}

#[test]
fn enumeration_respects_budget() {
    assert!(SubshiftFamily::full_grid().enumerate_words(6, g(3), 1000).is_err());
}

#[test]
fn finite_alphabet_must_be_on_grid() {
    let f = SubshiftFamily::FullShift { alphabet: Alphabet::Finite(vec![0.0, 0.3]) };
    assert!(f.validate(g(3)).is_err());
}

#[test]
fn iid_binary_sample_is_reproducible() {
    let m = MeasureSpec::uniform_iid(&[0.0, 1.0]);
    let a = m.sample_windows(4, 1, 42, g(2)).unwrap();
    let b = m.sample_windows(4, 1, 42, g(2)).unwrap();
    assert_eq!(a, b);
    assert!(a[0].values().iter().all(|&v| v == 0.0 || v == 1.0));
}

#[test]
fn shift_average_samples_are_admissible() {
    let m = MeasureSpec::ShiftAverageProduct { n: 4, k: 1 };
    let s = SubshiftFamily::sparse(4, 1);
    let samples = m.sample_windows(12, 10_000, 7, g(3)).unwrap();
    assert!(samples.iter().all(|w| s.contains(w)));
}

#[test]
fn iid_binary_frequency() {
    let m = MeasureSpec::uniform_iid(&[0.0, 1.0]);
    let samples = m.sample_windows(1, 100_000, 3, g(1)).unwrap();
    let ones = samples.iter().filter(|w| w.values()[0] == 1.0).count() as f64 / 1e5;
    assert!((ones - 0.5).abs() < 0.01, "{ones}");
}

#[test]
fn shift_average_is_stationary() {
    let grid = g(2);
    let m = MeasureSpec::ShiftAverageProduct { n: 4, k: 1 };
    let samples = m.sample_windows(5, 100_000, 11, grid).unwrap();
    let mut first: std::collections::HashMap<Vec<u32>, f64> = std::collections::HashMap::new();
    let mut second: std::collections::HashMap<Vec<u32>, f64> = std::collections::HashMap::new();
    for w in &samples {
        let idx = w.indices();
        *first.entry(idx[..4].to_vec()).or_insert(0.0) += 1.0;
        *second.entry(idx[1..].to_vec()).or_insert(0.0) += 1.0;
    }
    let keys: std::collections::HashSet<_> = first.keys().chain(second.keys()).cloned().collect();
    let tv: f64 = keys
        .iter()
        .map(|k| (first.get(k).unwrap_or(&0.0) - second.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / (2.0 * samples.len() as f64);
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn marginal_masses_sum_to_one() {
    let grid = g(3);
    for m in [MeasureSpec::ShiftAverageProduct { n: 4, k: 1 }, MeasureSpec::uniform_grid_iid(grid)] {
        let marg = m.marginal(3, grid, 1 << 20).unwrap();
        assert!((marg.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(marg.probs.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn invalid_pmf_rejected() {
    let m = MeasureSpec::Empirical { windows: vec![vec![0.0]], weights: vec![-1.0] };
    assert!(m.validate(g(2)).is_err());
}

#[test]
fn reciprocal_alphabet_collapses_collisions() {
    let f = SubshiftFamily::ReciprocalAlphabet { n_max: 64 };
    let letters = f.letters(g(3)).unwrap();
    let mut sorted = letters.clone();
    sorted.dedup();
    assert_eq!(sorted.len(), letters.len());
    assert!(letters.len() <= 9);
}

#[test]
fn norm_parses() {
    assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Inf);
    assert_eq!("2".parse::<Norm>().unwrap(), Norm::P(2.0));
    assert!("0.5".parse::<Norm>().is_err());
}
