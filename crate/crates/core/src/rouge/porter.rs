//! Porter stemming algorithm (the original five-step formulation).
//!
//! Tokens shorter than three characters or containing anything other than
//! ASCII letters pass through unchanged; otherwise the token is lowercased
//! and reduced.

use alloc::string::String;
use alloc::vec::Vec;

pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_alphabetic()) {
        return String::from(token);
    }
    let mut word = Word {
        b: token.bytes().map(|b| b.to_ascii_lowercase()).collect(),
    };
    word.step_1a();
    word.step_1b();
    word.step_1c();
    word.step_2();
    word.step_3();
    word.step_4();
    word.step_5a();
    word.step_5b();
    String::from_utf8(word.b).expect("ascii stays ascii")
}

struct Word {
    b: Vec<u8>,
}

impl Word {
    fn len(&self) -> usize {
        self.b.len()
    }

    // A consonant is any letter other than a/e/i/o/u, and other than y when
    // preceded by a consonant.
    fn cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    // Number of vowel-consonant sequences in the prefix b[0..len]; the "m"
    // of the [C](VC)^m[V] form.
    fn measure(&self, len: usize) -> usize {
        let mut n = 0;
        let mut i = 0;
        while i < len && self.cons(i) {
            i += 1;
        }
        while i < len {
            while i < len && !self.cons(i) {
                i += 1;
            }
            if i == len {
                break;
            }
            while i < len && self.cons(i) {
                i += 1;
            }
            n += 1;
        }
        n
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.cons(i))
    }

    fn ends_double_consonant(&self) -> bool {
        let n = self.len();
        n >= 2 && self.b[n - 1] == self.b[n - 2] && self.cons(n - 1)
    }

    // consonant-vowel-consonant ending at `i`, where the final consonant is
    // not w, x, or y.
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], b'w' | b'x' | b'y')
    }

    // When the word ends with `suffix`, the stem length, else None.
    fn ends(&self, suffix: &[u8]) -> Option<usize> {
        self.b
            .len()
            .checked_sub(suffix.len())
            .filter(|&at| &self.b[at..] == suffix)
    }

    fn replace(&mut self, stem_len: usize, with: &[u8]) {
        self.b.truncate(stem_len);
        self.b.extend_from_slice(with);
    }

    fn step_1a(&mut self) {
        for (suffix, with) in [
            (&b"sses"[..], &b"ss"[..]),
            (b"ies", b"i"),
            (b"ss", b"ss"),
            (b"s", b""),
        ] {
            if let Some(stem) = self.ends(suffix) {
                self.replace(stem, with);
                return;
            }
        }
    }

    fn step_1b(&mut self) {
        if let Some(stem) = self.ends(b"eed") {
            if self.measure(stem) > 0 {
                self.b.pop();
            }
            return;
        }
        let removed = [&b"ed"[..], &b"ing"[..]].into_iter().any(|suffix| {
            if let Some(stem) = self.ends(suffix)
                && self.has_vowel(stem)
            {
                self.b.truncate(stem);
                return true;
            }
            false
        });
        if !removed {
            return;
        }
        for (suffix, with) in [(&b"at"[..], &b"ate"[..]), (b"bl", b"ble"), (b"iz", b"ize")] {
            if let Some(stem) = self.ends(suffix) {
                self.replace(stem, with);
                return;
            }
        }
        if self.ends_double_consonant() {
            if !matches!(self.b[self.len() - 1], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else if self.measure(self.len()) == 1 && self.cvc(self.len() - 1) {
            self.b.push(b'e');
        }
    }

    fn step_1c(&mut self) {
        if let Some(stem) = self.ends(b"y")
            && self.has_vowel(stem)
        {
            self.b[stem] = b'i';
        }
    }

    // Longest matching suffix decides the rule; a failed condition still
    // ends the step.
    fn map_suffixes(&mut self, rules: &[(&[u8], &[u8])], min_measure: usize) {
        for &(suffix, with) in rules {
            if let Some(stem) = self.ends(suffix) {
                if self.measure(stem) > min_measure.saturating_sub(1) {
                    self.replace(stem, with);
                }
                return;
            }
        }
    }

    fn step_2(&mut self) {
        // Ordered longest-first so the longest suffix wins.
        self.map_suffixes(
            &[
                (b"ational", b"ate"),
                (b"ization", b"ize"),
                (b"iveness", b"ive"),
                (b"fulness", b"ful"),
                (b"ousness", b"ous"),
                (b"tional", b"tion"),
                (b"biliti", b"ble"),
                (b"alism", b"al"),
                (b"aliti", b"al"),
                (b"iviti", b"ive"),
                (b"entli", b"ent"),
                (b"ousli", b"ous"),
                (b"ation", b"ate"),
                (b"enci", b"ence"),
                (b"anci", b"ance"),
                (b"izer", b"ize"),
                (b"abli", b"able"),
                (b"alli", b"al"),
                (b"ator", b"ate"),
                (b"eli", b"e"),
            ],
            1,
        );
    }

    fn step_3(&mut self) {
        self.map_suffixes(
            &[
                (b"icate", b"ic"),
                (b"ative", b""),
                (b"alize", b"al"),
                (b"iciti", b"ic"),
                (b"ical", b"ic"),
                (b"ness", b""),
                (b"ful", b""),
            ],
            1,
        );
    }

    fn step_4(&mut self) {
        for suffix in [
            &b"ement"[..],
            b"ance",
            b"ence",
            b"able",
            b"ible",
            b"ment",
            b"ant",
            b"ent",
            b"ion",
            b"ism",
            b"ate",
            b"iti",
            b"ous",
            b"ive",
            b"ize",
            b"al",
            b"er",
            b"ic",
            b"ou",
        ] {
            if let Some(stem) = self.ends(suffix) {
                let allowed = self.measure(stem) > 1
                    && (suffix != b"ion"
                        || matches!(self.b.get(stem.wrapping_sub(1)), Some(b's' | b't')));
                if allowed {
                    self.b.truncate(stem);
                }
                return;
            }
        }
    }

    fn step_5a(&mut self) {
        if let Some(stem) = self.ends(b"e") {
            let m = self.measure(stem);
            if m > 1 || (m == 1 && !(stem >= 1 && self.cvc(stem - 1))) {
                self.b.pop();
            }
        }
    }

    fn step_5b(&mut self) {
        if self.measure(self.len()) > 1
            && self.ends_double_consonant()
            && self.b[self.len() - 1] == b'l'
        {
            self.b.pop();
        }
    }
}
