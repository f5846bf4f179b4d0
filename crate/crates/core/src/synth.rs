//! Seeded synthetic corpora for tests, benchmarks and `stats`.
//!
//! Sentences are `The` followed by lowercase filler words with capitalized
//! entity names mixed in, always separated by at least one filler word so
//! the rule-based extractor sees each name as its own mention.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ru", "te", "za", "vo", "be", "ni", "su", "po", "ge", "fa", "hi", "do", "ye",
];

const FILLER: &[&str] = &[
    "walked", "toward", "river", "quietly", "stone", "bridge", "market", "lantern", "carried",
    "bread", "window", "morning", "evening", "softly", "talked", "garden", "crossed", "field",
    "letter", "found", "door", "old", "tower", "green", "waited", "long", "hall", "brought",
    "silver", "cup", "road", "north", "south", "rain", "fell", "heavy", "cold", "fire", "warm",
    "sang", "song", "book", "opened", "closed", "gate", "near", "far", "hill", "boat", "shore",
];

/// Capitalized, 9-character name, distinct for every `i < 16^4`.
pub fn entity_name(i: usize) -> String {
    let mut s = String::from("Q");
    let mut x = i;
    for _ in 0..4 {
        s.push_str(SYLLABLES[x % 16]);
        x /= 16;
    }
    s
}

/// Canonical (lowercase) form of [`entity_name`].
pub fn entity_canonical(i: usize) -> String {
    entity_name(i).to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Approximate document length in tokens.
    pub tokens: usize,
    /// Size of the entity pool mentioned at random.
    pub entities: usize,
    /// Mentions per sentence are drawn from `0..=max_mentions`.
    pub max_mentions: usize,
    pub filler_per_sentence: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            tokens: 10_000,
            entities: 500,
            max_mentions: 2,
            filler_per_sentence: 9,
        }
    }
}

/// Two entities that appear together in exactly one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub a: String,
    pub b: String,
    pub sentence: String,
}

impl PlantedPair {
    pub fn question(&self) -> String {
        let cap = |s: &str| {
            let mut c = s.chars();
            c.next().map_or(String::new(), |f| f.to_uppercase().chain(c).collect())
        };
        format!("What happened between {} and {}?", cap(&self.a), cap(&self.b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub text: String,
    pub planted: Vec<PlantedPair>,
}

fn sentence(rng: &mut ChaCha8Rng, cfg: &SynthConfig, mentions: &[String]) -> (String, usize) {
    let mut words = vec!["The".to_string()];
    let mut slots: Vec<Option<&String>> = vec![None; cfg.filler_per_sentence.max(mentions.len())];
    for m in mentions {
        loop {
            let i = rng.random_range(0..slots.len());
            if slots[i].is_none() {
                slots[i] = Some(m);
                break;
            }
        }
    }
    for slot in slots {
        if let Some(m) = slot {
            words.push(m.clone());
        }
        words.push((*FILLER.choose(rng).expect("non-empty")).to_string());
    }
    let tokens = words.len() + 1;
    (words.join(" ") + ".", tokens)
}

/// Random corpus plus `planted` pairs. Planted names come from a range
/// disjoint from the random pool, so each pair co-occurs only in its own
/// sentence; every planted name also appears once alone elsewhere.
pub fn generate(cfg: &SynthConfig, planted: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sentences = Vec::new();
    let mut tokens = 0;
    while tokens < cfg.tokens {
        let n = if cfg.entities == 0 { 0 } else { rng.random_range(0..=cfg.max_mentions) };
        let mentions: Vec<String> = (0..n).map(|_| entity_name(rng.random_range(0..cfg.entities))).collect();
        let (s, t) = sentence(&mut rng, cfg, &mentions);
        sentences.push(s);
        tokens += t;
    }
    let base = cfg.entities.max(1);
    let mut pairs = Vec::with_capacity(planted);
    for p in 0..planted {
        let (a, b) = (entity_name(base + 2 * p), entity_name(base + 2 * p + 1));
        let (together, _) = sentence(&mut rng, cfg, &[a.clone(), b.clone()]);
        let (alone_a, _) = sentence(&mut rng, cfg, std::slice::from_ref(&a));
        let (alone_b, _) = sentence(&mut rng, cfg, std::slice::from_ref(&b));
        for text in [together.clone(), alone_a, alone_b] {
            let at = rng.random_range(0..=sentences.len());
            sentences.insert(at, text);
        }
        pairs.push(PlantedPair {
            a: a.to_lowercase(),
            b: b.to_lowercase(),
            sentence: together,
        });
    }
    Corpus {
        text: sentences.join(" "),
        planted: pairs,
    }
}
