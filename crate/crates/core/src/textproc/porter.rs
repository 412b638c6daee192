//! Porter suffix-stripping stemmer with the NLTK extensions, the variant
//! behind the common Python ROUGE tooling. Operates on lowercase ASCII words.
//!
//! Input that is not lowercase ASCII alphanumeric is returned unchanged, as
//! are words of two letters or fewer.

const IRREGULAR: &[(&str, &str)] = &[
    ("sky", "sky"),
    ("skies", "sky"),
    ("dying", "die"),
    ("lying", "lie"),
    ("tying", "tie"),
    ("news", "news"),
    ("innings", "inning"),
    ("inning", "inning"),
    ("outings", "outing"),
    ("outing", "outing"),
    ("cannings", "canning"),
    ("canning", "canning"),
    ("howe", "howe"),
    ("proceed", "proceed"),
    ("exceed", "exceed"),
    ("succeed", "succeed"),
];

pub fn stem(word: &str) -> String {
    if let Some((_, s)) = IRREGULAR.iter().find(|(w, _)| *w == word) {
        return s.to_string();
    }
    if word.len() <= 2
        || !word
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
    {
        return word.to_string();
    }
    let mut w = Word {
        b: word.as_bytes().to_vec(),
    };
    w.step1a();
    w.step1b();
    w.step1c();
    w.step2();
    w.step3();
    w.step4();
    w.step5a();
    w.step5b();
    String::from_utf8(w.b).expect("ascii in, ascii out")
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

struct Word {
    b: Vec<u8>,
}

impl Word {
    /// Consonant test used for suffix shape checks: a run of `y`s flips the
    /// class of the letter before it once per `y`.
    fn is_consonant(&self, mut i: usize) -> bool {
        let b = &self.b;
        if is_vowel(b[i]) {
            return false;
        }
        if b[i] != b'y' {
            return true;
        }
        let mut negate = false;
        while i > 0 && b[i] == b'y' {
            negate = !negate;
            i -= 1;
        }
        !is_vowel(b[i]) != negate
    }

    /// Left-to-right consonant flags of `b[..len]`, used for measure and
    /// vowel tests.
    fn flags(&self, len: usize) -> Vec<bool> {
        let mut f: Vec<bool> = Vec::with_capacity(len);
        for (i, &c) in self.b[..len].iter().enumerate() {
            let cons = if is_vowel(c) {
                false
            } else if c == b'y' {
                i == 0 || !f[i - 1]
            } else {
                true
            };
            f.push(cons);
        }
        f
    }

    /// Number of VC sequences in `b[..len]`.
    fn measure(&self, len: usize) -> usize {
        self.flags(len).windows(2).filter(|w| !w[0] && w[1]).count()
    }

    fn has_vowel(&self, len: usize) -> bool {
        self.flags(len).iter().any(|c| !c)
    }

    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// cvc where the final c is not w, x or y; also a bare vc stem.
    fn ends_cvc(&self, len: usize) -> bool {
        if len == 2 {
            return !self.is_consonant(0) && self.is_consonant(1);
        }
        len >= 3
            && self.is_consonant(len - 3)
            && !self.is_consonant(len - 2)
            && self.is_consonant(len - 1)
            && !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(&self, suffix: &str) -> bool {
        self.b.ends_with(suffix.as_bytes())
    }

    fn stem_len(&self, suffix: &str) -> usize {
        self.b.len() - suffix.len()
    }

    fn replace_suffix(&mut self, suffix: &str, replacement: &str) {
        let keep = self.stem_len(suffix);
        self.b.truncate(keep);
        self.b.extend_from_slice(replacement.as_bytes());
    }

    /// Applies the first rule whose suffix matches, if the remaining stem
    /// satisfies `cond`. Later rules are never tried once a suffix matches.
    fn apply_first(&mut self, rules: &[(&str, &str)], cond: impl Fn(&Self, usize, &str) -> bool) {
        if let Some(&(suffix, replacement)) = rules.iter().find(|(s, _)| self.ends_with(s)) {
            if cond(self, self.stem_len(suffix), suffix) {
                self.replace_suffix(suffix, replacement);
            }
        }
    }

    fn step1a(&mut self) {
        if self.ends_with("ies") && self.b.len() == 4 {
            self.replace_suffix("ies", "ie");
        } else if self.ends_with("sses") {
            self.replace_suffix("sses", "ss");
        } else if self.ends_with("ies") {
            self.replace_suffix("ies", "i");
        } else if self.ends_with("s") && !self.ends_with("ss") {
            self.replace_suffix("s", "");
        }
    }

    fn step1b(&mut self) {
        if self.ends_with("ied") {
            let r = if self.b.len() == 4 { "ie" } else { "i" };
            self.replace_suffix("ied", r);
            return;
        }
        if self.ends_with("eed") {
            if self.measure(self.stem_len("eed")) > 0 {
                self.replace_suffix("eed", "ee");
            }
            return;
        }
        let removed = if self.ends_with("ed") && self.has_vowel(self.stem_len("ed")) {
            self.replace_suffix("ed", "");
            true
        } else if self.ends_with("ing") && self.has_vowel(self.stem_len("ing")) {
            self.replace_suffix("ing", "");
            true
        } else {
            false
        };
        if !removed {
            return;
        }
        let len = self.b.len();
        if self.ends_with("at") {
            self.replace_suffix("at", "ate");
        } else if self.ends_with("bl") {
            self.replace_suffix("bl", "ble");
        } else if self.ends_with("iz") {
            self.replace_suffix("iz", "ize");
        } else if self.ends_double_consonant(len) {
            if !matches!(self.b[len - 1], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else if self.measure(len) == 1 && self.ends_cvc(len) {
            self.b.push(b'e');
        }
    }

    fn step1c(&mut self) {
        let len = self.b.len();
        if self.ends_with("y") && len > 2 && self.is_consonant(len - 2) {
            self.replace_suffix("y", "i");
        }
    }

    fn step2(&mut self) {
        if self.ends_with("alli") && self.measure(self.stem_len("alli")) > 0 {
            self.replace_suffix("alli", "al");
            return self.step2();
        }
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("bli", "ble"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
            ("fulli", "ful"),
            ("logi", "log"),
        ];
        self.apply_first(RULES, |w, len, suffix| {
            // `logi` keeps its `l` when measuring
            let len = if suffix == "logi" { len + 1 } else { len };
            w.measure(len) > 0
        });
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_first(RULES, |w, len, _| w.measure(len) > 0);
    }

    fn step4(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("al", ""),
            ("ance", ""),
            ("ence", ""),
            ("er", ""),
            ("ic", ""),
            ("able", ""),
            ("ible", ""),
            ("ant", ""),
            ("ement", ""),
            ("ment", ""),
            ("ent", ""),
            ("ion", ""),
            ("ou", ""),
            ("ism", ""),
            ("ate", ""),
            ("iti", ""),
            ("ous", ""),
            ("ive", ""),
            ("ize", ""),
        ];
        self.apply_first(RULES, |w, len, suffix| {
            w.measure(len) > 1
                && (suffix != "ion" || (len > 0 && matches!(w.b[len - 1], b's' | b't')))
        });
    }

    fn step5a(&mut self) {
        if self.ends_with("e") {
            let len = self.stem_len("e");
            let m = self.measure(len);
            if m > 1 || (m == 1 && !self.ends_cvc(len)) {
                self.b.pop();
            }
        }
    }

    fn step5b(&mut self) {
        let len = self.b.len();
        if self.ends_with("ll") && self.measure(len - 1) > 1 {
            self.b.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::stem;

    #[test]
    fn classic_vocabulary() {
        // Pairs from the published Porter test vocabulary.
        let cases = [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "tie"),
            ("caress", "caress"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("bled", "bled"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("conflated", "conflat"),
            ("troubled", "troubl"),
            ("sized", "size"),
            ("hopping", "hop"),
            ("tanned", "tan"),
            ("falling", "fall"),
            ("hissing", "hiss"),
            ("fizzed", "fizz"),
            ("failing", "fail"),
            ("filing", "file"),
            ("happy", "happi"),
            ("sky", "sky"),
            ("relational", "relat"),
            ("conditional", "condit"),
            ("rational", "ration"),
            ("valenci", "valenc"),
            ("digitizer", "digit"),
            ("conformabli", "conform"),
            ("radicalli", "radic"),
            ("differentli", "differ"),
            ("vileli", "vile"),
            ("analogousli", "analog"),
            ("vietnamization", "vietnam"),
            ("predication", "predic"),
            ("operator", "oper"),
            ("feudalism", "feudal"),
            ("decisiveness", "decis"),
            ("hopefulness", "hope"),
            ("callousness", "callous"),
            ("formaliti", "formal"),
            ("sensitiviti", "sensit"),
            ("sensibiliti", "sensibl"),
            ("triplicate", "triplic"),
            ("formative", "form"),
            ("formalize", "formal"),
            ("electriciti", "electr"),
            ("electrical", "electr"),
            ("hopeful", "hope"),
            ("goodness", "good"),
            ("revival", "reviv"),
            ("allowance", "allow"),
            ("inference", "infer"),
            ("airliner", "airlin"),
            ("gyroscopic", "gyroscop"),
            ("adjustable", "adjust"),
            ("defensible", "defens"),
            ("irritant", "irrit"),
            ("replacement", "replac"),
            ("adjustment", "adjust"),
            ("dependent", "depend"),
            ("adoption", "adopt"),
            ("homologou", "homolog"),
            ("communism", "commun"),
            ("activate", "activ"),
            ("angulariti", "angular"),
            ("homologous", "homolog"),
            ("effective", "effect"),
            ("bowdlerize", "bowdler"),
            ("probate", "probat"),
            ("rate", "rate"),
            ("cease", "ceas"),
            ("controll", "control"),
            ("roll", "roll"),
            ("generalizations", "gener"),
            ("oscillators", "oscil"),
        ];
        for (word, expected) in cases {
            assert_eq!(stem(word), expected, "stem({word})");
        }
    }

    #[test]
    fn running_and_runs() {
        assert_eq!(stem("running"), "run");
        assert_eq!(stem("runs"), "run");
    }

    #[test]
    fn short_and_non_ascii_untouched() {
        assert_eq!(stem("is"), "is");
        assert_eq!(stem("über"), "über");
    }
}
