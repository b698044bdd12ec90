use num_bigint::BigUint;
use proptest::prelude::*;
use subseq::counting::{brute_force_count, count_subsequences, CountMode};
use subseq::moments::binom::ln_biguint;
use subseq::Symbol;

fn bits(mut x: u32, len: usize) -> Vec<Symbol> {
    (0..len)
        .map(|_| {
            let b = (x & 1) as Symbol;
            x >>= 1;
            b
        })
        .collect()
}

/// Independent recursion: either skip the first text letter or match it.
fn recursive_count(text: &[Symbol], word: &[Symbol]) -> u64 {
    match (text.split_first(), word.split_first()) {
        (_, None) => 1,
        (None, Some(_)) => 0,
        (Some((&t, rest)), Some((&w, wrest))) => {
            let skip = recursive_count(rest, word);
            if t == w {
                skip + recursive_count(rest, wrest)
            } else {
                skip
            }
        }
    }
}

fn exact(text: &[Symbol], word: &[Symbol]) -> BigUint {
    count_subsequences(text, word, CountMode::Exact)
        .exact
        .unwrap()
}

#[test]
fn dp_equals_subset_enumeration_on_all_short_binary_inputs() {
    for n in 0..=12usize {
        for t in 0..(1u32 << n) {
            let text = bits(t, n);
            for m in 1..=4usize {
                for w in 0..(1u32 << m) {
                    let word = bits(w, m);
                    let dp = exact(&text, &word);
                    let brute = brute_force_count(&text, &word).unwrap();
                    assert_eq!(dp, BigUint::from(brute), "text={text:?} word={word:?}");
                }
            }
        }
    }
}

#[test]
fn length_ten_texts_against_independent_recursion() {
    for t in 0..(1u32 << 10) {
        let text = bits(t, 10);
        for w in 0..8u32 {
            let word = bits(w, 3);
            let brute = brute_force_count(&text, &word).unwrap();
            assert_eq!(brute, recursive_count(&text, &word));
        }
    }
}

fn word_strategy(alphabet: Symbol, max_len: usize) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(0..alphabet, 0..=max_len)
}

proptest! {
    #[test]
    fn appending_a_letter_never_decreases_the_count(
        text in word_strategy(3, 60),
        word in word_strategy(3, 6),
        extra in 0..3u8,
    ) {
        let before = exact(&text, &word);
        let mut longer = text.clone();
        longer.push(extra);
        prop_assert!(exact(&longer, &word) >= before);
    }

    #[test]
    fn concatenation_splits_the_pattern(
        x in word_strategy(2, 40),
        y in word_strategy(2, 40),
        word in word_strategy(2, 7),
    ) {
        let mut xy = x.clone();
        xy.extend_from_slice(&y);
        let m = word.len();
        let split: BigUint = (0..=m)
            .map(|k| exact(&x, &word[..k]) * exact(&y, &word[k..]))
            .sum();
        prop_assert_eq!(exact(&xy, &word), split);
    }

    #[test]
    fn float_mode_tracks_exact_logarithm(
        text in prop::collection::vec(0..2u8, 100..3000),
        word in prop::collection::vec(0..2u8, 1..50),
    ) {
        let e = exact(&text, &word);
        let f = count_subsequences(&text, &word, CountMode::Float).log_value;
        if e == BigUint::from(0u32) {
            prop_assert!(f.is_zero());
        } else {
            prop_assert!(e.bits() <= 4096);
            prop_assert!((f.ln_abs() - ln_biguint(&e)).abs() <= 1e-8);
        }
    }
}

#[test]
fn float_mode_at_the_largest_stated_size() {
    let d = subseq::SourceDist::parse(None, "0.3,0.7").unwrap();
    let text = subseq::source::generate_text(&d, 10_000, 11);
    let word = subseq::Pattern::random(50, &d, 12).unwrap();
    let e = exact(text.letters(), word.word());
    assert!(e.bits() <= 4096);
    let f = count_subsequences(&text, &word, CountMode::Float).log_value;
    assert!((f.ln_abs() - ln_biguint(&e)).abs() <= 1e-8);
}
