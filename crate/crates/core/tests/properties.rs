use std::collections::HashSet;
use std::sync::LazyLock;

use proptest::prelude::*;
use vt_core::analysis::{mean_subword_count, subword_histogram};
use vt_core::corpus::{dedup_stream, normalize_str, split_holdout, EmojiMap, TweetRecord};
use vt_core::tokenizer::{tokenize_word, train_wordpiece, Vocabulary, DEFAULT_SPECIALS};

static EMOJI: LazyLock<EmojiMap> = LazyLock::new(EmojiMap::builtin);

fn specials() -> Vec<String> {
    DEFAULT_SPECIALS.iter().map(|s| s.to_string()).collect()
}

fn fixture_vocab() -> Vocabulary {
    let extra = [
        "a", "b", "c", "ab", "abc", "ca", "##a", "##b", "##c", "##ab", "##bc", "##cab", "##bb",
    ];
    Vocabulary::new(
        specials()
            .into_iter()
            .chain(extra.iter().map(|s| s.to_string()))
            .collect(),
    )
    .unwrap()
}

fn tweet_text() -> impl Strategy<Value = String> {
    let fragments = prop::sample::select(vec![
        "Hello",
        "WORLD",
        " ",
        "  \t",
        "\n",
        "http://t.co/AbC",
        "https://x.org/p?q=1",
        "www.Example.com",
        "@Bob_99",
        "@",
        "a@b.c",
        "#Tag",
        "😂",
        "👍🏽",
        "🇮🇩",
        "❤️",
        "©",
        "İstanbul",
        "ÄÖÜ",
        "!",
        ",",
        "x",
        "HTTPURL",
        "@USER",
        ":smile:",
    ]);
    prop::collection::vec(fragments, 0..12).prop_map(|parts| parts.concat())
}

proptest! {
    #[test]
    fn normalization_is_idempotent(text in tweet_text()) {
        let once = normalize_str(&text, &EMOJI);
        prop_assert_eq!(normalize_str(&once, &EMOJI), once);
    }

    #[test]
    fn normalization_is_idempotent_on_arbitrary_text(text in any::<String>()) {
        let once = normalize_str(&text, &EMOJI);
        prop_assert_eq!(normalize_str(&once, &EMOJI), once);
    }

    #[test]
    fn normalized_text_has_no_emoji(text in tweet_text()) {
        let out = normalize_str(&text, &EMOJI);
        for key in EMOJI.keys() {
            prop_assert!(!out.contains(key), "{:?} left in {:?}", key, out);
        }
        prop_assert!(!out.contains("  "));
        prop_assert_eq!(out.trim(), out.as_str());
    }

    #[test]
    fn dedup_keeps_first_of_each_id(ids in prop::collection::vec(0u8..8, 0..40)) {
        let records: Vec<TweetRecord> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| TweetRecord::new(id.to_string(), i.to_string()).unwrap())
            .collect();
        let out: Vec<TweetRecord> = dedup_stream(records.clone()).collect();

        let mut seen = HashSet::new();
        let expected: Vec<&TweetRecord> = records.iter().filter(|r| seen.insert(r.id.clone())).collect();
        prop_assert_eq!(out.iter().collect::<Vec<_>>(), expected);
        let distinct: HashSet<&str> = out.iter().map(|r| r.id.as_str()).collect();
        prop_assert_eq!(distinct.len(), out.len());
    }

    #[test]
    fn split_partitions_input(n in 0usize..200, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let (train, dev) = split_holdout((0..n).collect(), fraction, seed).unwrap();
        prop_assert_eq!(dev.len(), (fraction * n as f64).round() as usize);
        prop_assert_eq!(train.len() + dev.len(), n);
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(dev.windows(2).all(|w| w[0] < w[1]));
        let mut all: Vec<usize> = train.iter().chain(&dev).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn tokenization_round_trips_and_is_greedy(word in "[abcd]{1,12}") {
        let vocab = fixture_vocab();
        let result = tokenize_word(&word, &vocab).unwrap();
        if result.is_unk {
            prop_assert_eq!(result.pieces, vec!["[UNK]".to_string()]);
            return Ok(());
        }
        prop_assert_eq!(result.detokenize("##"), word.clone());
        let mut rest = word.as_str();
        for (i, piece) in result.pieces.iter().enumerate() {
            prop_assert!(vocab.contains(piece));
            let surface = if i == 0 { piece.as_str() } else { piece.strip_prefix("##").unwrap() };
            prop_assert!(rest.starts_with(surface));
            for len in surface.len() + 1..=rest.len() {
                let longer = if i == 0 { rest[..len].to_string() } else { format!("##{}", &rest[..len]) };
                prop_assert!(!vocab.contains(&longer), "{} was available at piece {}", longer, i);
            }
            rest = &rest[surface.len()..];
        }
        prop_assert!(rest.is_empty());
    }

    #[test]
    fn trained_vocab_has_exact_size(
        lines in prop::collection::vec("[a-e]{1,6}( [a-e]{1,6}){0,4}", 1..20),
        n_unused in 0usize..4,
        extra in 1usize..30,
    ) {
        let distinct: HashSet<char> = lines.iter().flat_map(|l| l.chars()).filter(|c| *c != ' ').collect();
        let target = DEFAULT_SPECIALS.len() + n_unused + 2 * distinct.len() + extra;
        let vocab = train_wordpiece(&lines, target, 1, &specials(), n_unused).unwrap();
        prop_assert_eq!(vocab.len(), target);
        prop_assert_eq!(&vocab.tokens()[..DEFAULT_SPECIALS.len()], DEFAULT_SPECIALS);
        for c in distinct {
            let continued = format!("##{c}");
            let covered = vocab.contains(&c.to_string()) || vocab.contains(&continued);
            prop_assert!(covered);
        }
    }

    #[test]
    fn histogram_mass_and_mean_bounds(words in prop::collection::hash_set("[abcd]{1,8}", 1..30)) {
        let words: Vec<String> = words.into_iter().collect();
        let hist = subword_histogram(&words, &fixture_vocab()).unwrap();
        prop_assert_eq!(hist.values().sum::<usize>(), words.len());
        let mean = mean_subword_count(&hist).unwrap();
        let lo = *hist.keys().next().unwrap() as f64;
        let hi = *hist.keys().next_back().unwrap() as f64;
        prop_assert!(lo <= mean && mean <= hi);
    }
}
