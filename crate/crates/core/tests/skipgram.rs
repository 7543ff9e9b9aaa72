use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use vt_core::vectors::{cosine, load_text, save_text, train_skipgram, SkipgramConfig, TrainingMode, WordVectors};

const TOPICS: [[&str; 5]; 3] = [
    ["sun", "moon", "star", "sky", "comet"],
    ["bread", "milk", "cheese", "butter", "flour"],
    ["piano", "violin", "drum", "flute", "harp"],
];

/// Lines drawn from one topic at a time.
fn topic_corpus(seed: u64, lines: usize) -> Vec<String> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..lines)
        .map(|_| {
            let topic = &TOPICS[rng.random_range(0..TOPICS.len())];
            (0..8)
                .map(|_| topic[rng.random_range(0..topic.len())])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn config() -> SkipgramConfig {
    SkipgramConfig {
        dim: 16,
        window: 3,
        epochs: 5,
        min_count: 1,
        buckets: 1 << 12,
        seed: 17,
        ..SkipgramConfig::default()
    }
}

fn sim(v: &WordVectors, a: &str, b: &str) -> f64 {
    cosine(v.embedding(a).unwrap().view(), v.embedding(b).unwrap().view())
}

#[test]
fn designed_pairs_beat_random_pairs() {
    let vectors = train_skipgram(&topic_corpus(1, 3000), &config()).unwrap();
    let mut within = Vec::new();
    let mut across = Vec::new();
    for (t, topic) in TOPICS.iter().enumerate() {
        for (i, a) in topic.iter().enumerate() {
            for b in &topic[i + 1..] {
                within.push(sim(&vectors, a, b));
            }
            for other in &TOPICS[t + 1..] {
                for b in other {
                    across.push(sim(&vectors, a, b));
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (w, a) = (mean(&within), mean(&across));
    assert!(w > a + 0.2, "within {w} across {a}");
}

#[test]
fn shared_contexts_make_substitutes_similar() {
    // "alpha" and "beta" occur in the same contexts, "gamma" elsewhere.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let left = ["red", "green", "blue"];
    let right = ["one", "two", "three"];
    let corpus: Vec<String> = (0..3000)
        .map(|_| {
            let (word, ctx) = match rng.random_range(0..3) {
                0 => ("alpha", &left),
                1 => ("beta", &left),
                _ => ("gamma", &right),
            };
            format!(
                "{} {} {word} {}",
                ctx[rng.random_range(0..3)],
                ctx[rng.random_range(0..3)],
                ctx[rng.random_range(0..3)]
            )
        })
        .collect();
    let vectors = train_skipgram(&corpus, &config()).unwrap();
    assert!(sim(&vectors, "alpha", "beta") > sim(&vectors, "alpha", "gamma"));
    assert!(sim(&vectors, "alpha", "beta") > sim(&vectors, "beta", "gamma"));
}

#[test]
fn hogwild_training_learns_topics_too() {
    let cfg = SkipgramConfig {
        mode: TrainingMode::Hogwild { workers: 3 },
        ..config()
    };
    let vectors = train_skipgram(&topic_corpus(2, 3000), &cfg).unwrap();
    assert!(sim(&vectors, "sun", "moon") > sim(&vectors, "sun", "bread"));
}

#[test]
fn same_seed_same_vectors_and_text_round_trip() {
    let corpus = topic_corpus(4, 300);
    let a = train_skipgram(&corpus, &config()).unwrap();
    let b = train_skipgram(&corpus, &config()).unwrap();
    assert_eq!(a.rows(), b.rows());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.vec");
    save_text(&a, &path).unwrap();
    let loaded = load_text(&path).unwrap();
    assert_eq!(loaded.vocab(), a.vocab());
    for word in a.vocab() {
        let (x, y) = (a.embedding(word).unwrap(), loaded.embedding(word).unwrap());
        assert!(x
            .iter()
            .zip(&y)
            .all(|(p, q)| (p - q).abs() <= 1e-8 * p.abs().max(1e-30)));
    }
}
