//! Constant-length substitutions: supertile expansion, the finite language
//! pieces the rest of the crate needs, and local recognizability.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// Longest word we try when searching for the recognizability length.
const MAX_RECOGNIZABILITY_LENGTH: usize = 256;
/// Supertiles longer than this are refused (memory guard).
const MAX_SUPERTILE_LEN: usize = 1 << 26;

/// A primitive, aperiodic substitution of constant length `q` on the alphabet `0..n`.
/// Supertiles keyed by letter and level.
type SupertileCache = HashMap<(u8, u32), Arc<[u8]>>;

#[derive(Debug)]
pub struct Substitution {
    alphabet: Vec<char>,
    rules: Vec<Vec<u8>>,
    q: usize,
    legal_pairs: Vec<[u8; 2]>,
    legal_triples: Vec<[u8; 3]>,
    recognizability_length: usize,
    radius_constant: usize,
    cache: Mutex<SupertileCache>,
}

impl Substitution {
    /// Validates and builds a substitution. `rules[a]` is the image of letter `a`.
    pub fn new(alphabet: Vec<char>, rules: Vec<Vec<u8>>) -> Result<Self> {
        let n = alphabet.len();
        if n < 2 {
            return Err(Error::InvalidSystem("alphabet needs at least two letters".into()));
        }
        if n > u8::MAX as usize {
            return Err(Error::InvalidSystem("alphabet too large".into()));
        }
        if rules.len() != n {
            return Err(Error::InvalidSystem(format!(
                "{} rules for an alphabet of {} letters",
                rules.len(),
                n
            )));
        }
        let q = rules[0].len();
        if q < 2 {
            return Err(Error::InvalidSystem("substitution length must be at least 2".into()));
        }
        for (a, image) in rules.iter().enumerate() {
            if image.len() != q {
                return Err(Error::InvalidSystem(format!(
                    "not constant length: image of {} has length {}, expected {}",
                    alphabet[a],
                    image.len(),
                    q
                )));
            }
            if let Some(&bad) = image.iter().find(|&&s| s as usize >= n) {
                return Err(Error::InvalidSystem(format!("image uses unknown symbol {bad}")));
            }
        }
        check_primitive(&rules)?;

        let mut sub = Substitution {
            alphabet,
            rules,
            q,
            legal_pairs: Vec::new(),
            legal_triples: Vec::new(),
            recognizability_length: 0,
            radius_constant: 0,
            cache: Mutex::new(HashMap::new()),
        };
        sub.check_aperiodic()?;
        sub.legal_pairs = sub.close_legal_pairs();
        sub.legal_triples = sub
            .legal_words(3)
            .into_iter()
            .map(|w| [w[0], w[1], w[2]])
            .collect();
        sub.recognizability_length = sub.find_recognizability_length()?;
        // Radius recursion: rho_j >= q*rho_{j+1} + q - 1 down to rho_{K-1} >= rho_star,
        // which is dominated by c*q^(K+1) once c*q^2 >= rho_star + 1.
        let rho_star = sub.recognizability_length.saturating_sub(1).div_ceil(2).max(q - 1);
        sub.radius_constant = (rho_star + 1).div_ceil(q * q).max(1);
        Ok(sub)
    }

    pub fn length(&self) -> usize {
        self.q
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn image(&self, letter: u8) -> &[u8] {
        &self.rules[letter as usize]
    }

    pub fn rules(&self) -> &[Vec<u8>] {
        &self.rules
    }

    pub fn letter(&self, c: char) -> Result<u8> {
        self.alphabet
            .iter()
            .position(|&a| a == c)
            .map(|i| i as u8)
            .ok_or_else(|| Error::Contract(format!("unknown letter {c:?}")))
    }

    pub fn render(&self, word: &[u8]) -> String {
        word.iter().map(|&s| self.alphabet[s as usize]).collect()
    }

    pub fn parse_word(&self, s: &str) -> Result<Vec<u8>> {
        s.chars().map(|c| self.letter(c)).collect()
    }

    /// Applies the substitution `level` times to `word`.
    pub fn expand(&self, word: &[u8], level: u32) -> Vec<u8> {
        let mut cur = word.to_vec();
        for _ in 0..level {
            cur = cur.iter().flat_map(|&a| self.rules[a as usize].iter().copied()).collect();
        }
        cur
    }

    /// `s^level(letter)`, cached.
    pub fn supertile(&self, letter: u8, level: u32) -> Result<Arc<[u8]>> {
        if letter as usize >= self.alphabet.len() {
            return Err(Error::Contract(format!("unknown letter index {letter}")));
        }
        let len = (self.q as u128).checked_pow(level).unwrap_or(u128::MAX);
        if len > MAX_SUPERTILE_LEN as u128 {
            return Err(Error::Contract(format!("supertile level {level} too large")));
        }
        if let Some(t) = self.cache.lock().unwrap().get(&(letter, level)) {
            return Ok(t.clone());
        }
        let tile: Arc<[u8]> = if level == 0 {
            Arc::from(vec![letter])
        } else {
            let prev = self.supertile(letter, level - 1)?;
            Arc::from(self.expand(&prev, 1))
        };
        self.cache.lock().unwrap().insert((letter, level), tile.clone());
        Ok(tile)
    }

    /// Smallest level whose supertiles have length at least `len`.
    pub fn level_for(&self, len: usize) -> u32 {
        let mut level = 0;
        let mut size = 1usize;
        while size < len {
            size = size.saturating_mul(self.q);
            level += 1;
        }
        level
    }

    /// `s^level(w[0]) s^level(w[1]) ...`
    pub fn expand_concat(&self, word: &[u8], level: u32) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for &a in word {
            out.extend_from_slice(&self.supertile(a, level)?);
        }
        Ok(out)
    }

    /// Legal two-letter words, sorted.
    pub fn legal_pairs(&self) -> &[[u8; 2]] {
        &self.legal_pairs
    }

    /// Legal three-letter words, sorted.
    pub fn legal_triples(&self) -> &[[u8; 3]] {
        &self.legal_triples
    }

    /// Letters `c` such that `bc` is legal.
    pub fn successors(&self, b: u8) -> Vec<u8> {
        self.legal_pairs.iter().filter(|p| p[0] == b).map(|p| p[1]).collect()
    }

    /// Letters `a` such that `ab` is legal.
    pub fn predecessors(&self, b: u8) -> Vec<u8> {
        self.legal_pairs.iter().filter(|p| p[1] == b).map(|p| p[0]).collect()
    }

    /// Every legal word of length `len`, sorted. Every such word sits inside
    /// some `s^k(b) s^k(c)` with `bc` legal and `q^k >= len`.
    pub fn legal_words(&self, len: usize) -> Vec<Vec<u8>> {
        let pairs = if self.legal_pairs.is_empty() {
            self.close_legal_pairs()
        } else {
            self.legal_pairs.clone()
        };
        let level = self.level_for(len.max(1));
        let mut words = BTreeSet::new();
        for p in &pairs {
            let w = self.expand(p, level);
            for f in w.windows(len) {
                words.insert(f.to_vec());
            }
        }
        words.into_iter().collect()
    }

    /// True when `word` is a factor of the language (checked against the supertile pairs).
    pub fn is_legal(&self, word: &[u8]) -> bool {
        if word.is_empty() {
            return true;
        }
        let level = self.level_for(word.len());
        self.legal_pairs.iter().any(|p| {
            self.expand(p, level)
                .windows(word.len())
                .any(|f| f == word)
        })
    }

    /// Letter whose image is `block`, if any.
    pub fn decode_block(&self, block: &[u8]) -> Option<u8> {
        self.rules.iter().position(|r| r.as_slice() == block).map(|i| i as u8)
    }

    /// Start offsets `r` in `0..q` such that every complete block of `word`,
    /// cut with `word[0]` at position `r` of its block, is an image of a letter.
    pub fn parse_offsets(&self, word: &[u8]) -> Vec<usize> {
        (0..self.q).filter(|&r| self.parses_at(word, r)).collect()
    }

    pub(crate) fn parses_at(&self, word: &[u8], r: usize) -> bool {
        let first = (self.q - r) % self.q;
        let mut j = first;
        while j + self.q <= word.len() {
            if self.decode_block(&word[j..j + self.q]).is_none() {
                return false;
            }
            j += self.q;
        }
        true
    }

    /// Length from which every legal word has exactly one admissible parse offset.
    pub fn recognizability_length(&self) -> usize {
        self.recognizability_length
    }

    /// The constant `c` in `R(K) = c * q^(K+1)`.
    pub fn radius_constant(&self) -> usize {
        self.radius_constant
    }

    /// Window radius needed to read `depth` address digits.
    pub fn address_radius(&self, depth: usize) -> usize {
        self.radius_constant * self.q.pow(depth as u32 + 1)
    }

    /// Binary alphabet whose rules are exchanged by the bit flip (Thue–Morse type).
    pub fn is_flip_symmetric(&self) -> bool {
        self.alphabet.len() == 2
            && self.rules[0].iter().zip(&self.rules[1]).all(|(a, b)| *a == 1 - *b)
    }

    fn close_legal_pairs(&self) -> Vec<[u8; 2]> {
        let mut pairs: BTreeSet<[u8; 2]> = BTreeSet::new();
        for r in &self.rules {
            for w in r.windows(2) {
                pairs.insert([w[0], w[1]]);
            }
        }
        loop {
            let mut next = pairs.clone();
            for p in &pairs {
                let img = self.expand(p, 1);
                for w in img.windows(2) {
                    next.insert([w[0], w[1]]);
                }
            }
            if next.len() == pairs.len() {
                return pairs.into_iter().collect();
            }
            pairs = next;
        }
    }

    fn check_aperiodic(&self) -> Result<()> {
        let level = self.level_for(2048);
        let w = self.supertile(0, level)?;
        for p in 1..=w.len() / 4 {
            if (0..w.len() - p).all(|i| w[i] == w[i + p]) {
                return Err(Error::InvalidSystem(format!(
                    "substitution generates a periodic sequence (period {p})"
                )));
            }
        }
        Ok(())
    }

    fn find_recognizability_length(&self) -> Result<usize> {
        for len in 1..=MAX_RECOGNIZABILITY_LENGTH {
            let level = self.level_for(len).max(1);
            // word -> set of true start offsets seen
            let mut seen: BTreeMap<Vec<u8>, BTreeSet<usize>> = BTreeMap::new();
            for p in &self.legal_pairs {
                let w = self.expand(p, level);
                for (i, f) in w.windows(len).enumerate() {
                    seen.entry(f.to_vec()).or_default().insert(i % self.q);
                }
            }
            let unique = seen.iter().all(|(word, truth)| {
                truth.len() == 1 && self.parse_offsets(word).len() == 1
            });
            if unique {
                return Ok(len);
            }
        }
        Err(Error::InvalidSystem(format!(
            "no recognizability length up to {MAX_RECOGNIZABILITY_LENGTH}"
        )))
    }
}

fn check_primitive(rules: &[Vec<u8>]) -> Result<()> {
    let n = rules.len();
    let base: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| rules[a].contains(&(b as u8))).collect())
        .collect();
    let mut power = base.clone();
    // Wielandt: a primitive n x n matrix has a positive power at exponent (n-1)^2 + 1.
    let bound = (n - 1) * (n - 1) + 1;
    for _ in 0..bound {
        if power.iter().all(|row| row.iter().all(|&x| x)) {
            return Ok(());
        }
        power = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).any(|k| power[i][k] && base[k][j]))
                    .collect()
            })
            .collect();
    }
    if power.iter().all(|row| row.iter().all(|&x| x)) {
        return Ok(());
    }
    Err(Error::InvalidSystem("substitution is not primitive".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm() -> Substitution {
        Substitution::new(vec!['0', '1'], vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn expands_thue_morse_by_hand() {
        let s = tm();
        assert_eq!(s.render(&s.supertile(0, 2).unwrap()), "0110");
        assert_eq!(s.render(&s.supertile(1, 2).unwrap()), "1001");
        assert_eq!(s.render(&s.supertile(1, 0).unwrap()), "1");
        assert_eq!(s.render(&s.supertile(0, 4).unwrap()), "0110100110010110");
    }

    #[test]
    fn rejects_imprimitive_and_periodic() {
        let e = Substitution::new(vec!['0', '1'], vec![vec![0, 0], vec![1, 1]]).unwrap_err();
        assert!(matches!(e, Error::InvalidSystem(_)));
        let e = Substitution::new(vec!['0', '1'], vec![vec![0, 1], vec![0, 1]]).unwrap_err();
        assert!(e.to_string().contains("periodic"), "{e}");
        let e = Substitution::new(vec!['0', '1'], vec![vec![0, 1], vec![1]]).unwrap_err();
        assert!(e.to_string().contains("constant length"), "{e}");
    }

    #[test]
    fn thue_morse_language_pieces() {
        let s = tm();
        assert_eq!(s.legal_pairs(), &[[0, 0], [0, 1], [1, 0], [1, 1]]);
        // cube-free: 000 and 111 never occur
        assert!(!s.legal_triples().contains(&[0, 0, 0]));
        assert!(!s.legal_triples().contains(&[1, 1, 1]));
        assert_eq!(s.legal_triples().len(), 6);
        assert!(s.is_legal(&[0, 1, 1, 0, 1]));
        assert!(!s.is_legal(&[0, 0, 0]));
        assert!(s.is_flip_symmetric());
    }

    #[test]
    fn parse_offsets_by_hand() {
        let s = tm();
        // 01|10 parses at offset 0 only
        assert_eq!(s.parse_offsets(&[0, 1, 1, 0]), vec![0]);
        // 1010 is locally ambiguous
        assert_eq!(s.parse_offsets(&[1, 0, 1, 0]), vec![0, 1]);
    }

    #[test]
    fn recognizability_constants_are_small() {
        let s = tm();
        let l = s.recognizability_length();
        assert!((4..=16).contains(&l), "{l}");
        // every legal word of that length decodes uniquely
        for w in s.legal_words(l) {
            assert_eq!(s.parse_offsets(&w).len(), 1);
        }
        let pd = Substitution::new(vec!['0', '1'], vec![vec![0, 1], vec![0, 0]]).unwrap();
        assert!(pd.recognizability_length() <= 16);
        assert!(!pd.is_flip_symmetric());
    }
}
