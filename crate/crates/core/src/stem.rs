//! Porter suffix-stripping stemmer (the classic 1980 algorithm).
//!
//! Operates on lowercase ASCII words. Tokens containing anything other than
//! `a..z` (digits, hyphens, category tags) are returned unchanged, which is
//! what the preprocessing pipeline wants: digit runs and already-generalized
//! tokens must pass through untouched.

/// Stem a single token. Non-alphabetic tokens are returned as-is.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w: Vec<u8> = word.as_bytes().to_vec();
    step_1a(&mut w);
    step_1b(&mut w);
    step_1c(&mut w);
    step_2(&mut w);
    step_3(&mut w);
    step_4(&mut w);
    step_5a(&mut w);
    step_5b(&mut w);
    String::from_utf8(w).expect("ascii input stays ascii")
}

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// The measure m of a stem: the number of vowel-consonant sequences in
/// the form [C](VC)^m[V].
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut i = 0;
    let n = w.len();
    while i < n && is_consonant(w, i) {
        i += 1;
    }
    loop {
        while i < n && !is_consonant(w, i) {
            i += 1;
        }
        if i == n {
            return m;
        }
        while i < n && is_consonant(w, i) {
            i += 1;
        }
        m += 1;
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// *o condition: stem ends cvc where the final consonant is not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &[u8]) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix
}

fn replace(w: &mut Vec<u8>, suffix_len: usize, with: &[u8]) {
    let keep = w.len() - suffix_len;
    w.truncate(keep);
    w.extend_from_slice(with);
}

fn step_1a(w: &mut Vec<u8>) {
    if ends_with(w, b"sses") {
        replace(w, 4, b"ss");
    } else if ends_with(w, b"ies") {
        replace(w, 3, b"i");
    } else if ends_with(w, b"ss") {
        // unchanged
    } else if ends_with(w, b"s") {
        replace(w, 1, b"");
    }
}

fn step_1b(w: &mut Vec<u8>) {
    if ends_with(w, b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            replace(w, 3, b"ee");
        }
        return;
    }
    let removed = if ends_with(w, b"ed") && has_vowel(&w[..w.len() - 2]) {
        w.truncate(w.len() - 2);
        true
    } else if ends_with(w, b"ing") && has_vowel(&w[..w.len() - 3]) {
        w.truncate(w.len() - 3);
        true
    } else {
        false
    };
    if removed {
        if ends_with(w, b"at") || ends_with(w, b"bl") || ends_with(w, b"iz") {
            w.push(b'e');
        } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.truncate(w.len() - 1);
        } else if measure(w) == 1 && ends_cvc(w) {
            w.push(b'e');
        }
    }
}

fn step_1c(w: &mut [u8]) {
    if ends_with(w, b"y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// Suffix table rules: (suffix, replacement); the longest matching suffix
/// is selected and applied only if measure(stem) exceeds the threshold.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&[u8], &[u8])], min_measure: usize) {
    let best = rules
        .iter()
        .filter(|(s, _)| ends_with(w, s))
        .max_by_key(|(s, _)| s.len());
    if let Some((suffix, with)) = best {
        if measure(&w[..w.len() - suffix.len()]) > min_measure {
            replace(w, suffix.len(), with);
        }
    }
}

fn step_2(w: &mut Vec<u8>) {
    const RULES: &[(&[u8], &[u8])] = &[
        (b"ational", b"ate"),
        (b"tional", b"tion"),
        (b"enci", b"ence"),
        (b"anci", b"ance"),
        (b"izer", b"ize"),
        (b"abli", b"able"),
        (b"alli", b"al"),
        (b"entli", b"ent"),
        (b"eli", b"e"),
        (b"ousli", b"ous"),
        (b"ization", b"ize"),
        (b"ation", b"ate"),
        (b"ator", b"ate"),
        (b"alism", b"al"),
        (b"iveness", b"ive"),
        (b"fulness", b"ful"),
        (b"ousness", b"ous"),
        (b"aliti", b"al"),
        (b"iviti", b"ive"),
        (b"biliti", b"ble"),
    ];
    apply_rules(w, RULES, 0);
}

fn step_3(w: &mut Vec<u8>) {
    const RULES: &[(&[u8], &[u8])] = &[
        (b"icate", b"ic"),
        (b"ative", b""),
        (b"alize", b"al"),
        (b"iciti", b"ic"),
        (b"ical", b"ic"),
        (b"ful", b""),
        (b"ness", b""),
    ];
    apply_rules(w, RULES, 0);
}

fn step_4(w: &mut Vec<u8>) {
    const RULES: &[&[u8]] = &[
        b"al", b"ance", b"ence", b"er", b"ic", b"able", b"ible", b"ant", b"ement", b"ment",
        b"ent", b"ion", b"ou", b"ism", b"ate", b"iti", b"ous", b"ive", b"ize",
    ];
    let best = RULES
        .iter()
        .filter(|s| ends_with(w, s))
        .max_by_key(|s| s.len());
    if let Some(suffix) = best {
        let stem = &w[..w.len() - suffix.len()];
        let ok = if *suffix == b"ion" {
            measure(stem) > 1 && !stem.is_empty() && matches!(stem[stem.len() - 1], b's' | b't')
        } else {
            measure(stem) > 1
        };
        if ok {
            let keep = w.len() - suffix.len();
            w.truncate(keep);
        }
    }
}

fn step_5a(w: &mut Vec<u8>) {
    if ends_with(w, b"e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.truncate(w.len() - 1);
        }
    }
}

fn step_5b(w: &mut Vec<u8>) {
    if measure(w) > 1 && ends_double_consonant(w) && w[w.len() - 1] == b'l' {
        w.truncate(w.len() - 1);
    }
}
