use super::tokenize;

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate, minimum 1.
///
/// A final `e` that forms its own vowel group is silent, except in the
/// consonant + `le` ending ("peo-ple").
pub fn count_syllables(word: &str) -> usize {
    let chars: Vec<char> = word
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphabetic())
        .collect();
    let mut groups: usize = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]) {
        let consonant_le = n >= 3 && chars[n - 2] == 'l' && !is_vowel(chars[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// Flesch-Kincaid grade level; 0.0 for text without words.
pub fn flesch_kincaid_grade(text: &str) -> f64 {
    let t = tokenize(text);
    if t.tokens.is_empty() {
        return 0.0;
    }
    let words = t.tokens.len() as f64;
    let sentences = t.sentences.len().max(1) as f64;
    let syllables: usize = t.tokens.iter().map(|w| count_syllables(w)).sum();
    0.39 * (words / sentences) + 11.8 * (syllables as f64 / words) - 15.59
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syllable_examples() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("a"), 1);
        // dictionary spot checks
        for (w, n) in [
            ("people", 2),
            ("table", 2),
            ("make", 1),
            ("the", 1),
            ("reading", 2),
            ("banana", 3),
            ("syllable", 3),
            ("free", 1),
        ] {
            assert_eq!(count_syllables(w), n, "{w}");
        }
    }

    #[test]
    fn grade_examples() {
        let g = flesch_kincaid_grade("The cat sat.");
        assert!((g - -2.62).abs() < 1e-9, "{g}");
        assert_eq!(flesch_kincaid_grade(""), 0.0);
        let once = flesch_kincaid_grade("The cat sat on the mat.");
        let twice = flesch_kincaid_grade("The cat sat on the mat. The cat sat on the mat.");
        assert!((once - twice).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn grade_invariant_under_duplication(
            sentences in proptest::collection::vec("[a-z]{1,9}( [a-z]{1,9}){0,8}[.!?]", 1..6)
        ) {
            let text = sentences.join(" ");
            let doubled = format!("{text} {text}");
            let a = flesch_kincaid_grade(&text);
            let b = flesch_kincaid_grade(&doubled);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
