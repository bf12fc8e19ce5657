//! Synthetic corpora and datasets with a known shape, for benchmarks,
//! smoke runs and code-path tests when the real data is not at hand.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::dataset::{na_record, QuestionRecord, RecordLabel};

/// Category, records, N/A records.
pub const DATASET_SHAPE: &[(&str, usize, usize)] = &[
    ("Backpacking Packs", 100, 16),
    ("Tents", 100, 23),
    ("Bikes", 100, 23),
    ("Jackets", 100, 23),
    ("Vacuums", 100, 23),
    ("Blenders", 100, 23),
    ("Espresso Machines", 100, 48),
    ("Grills", 100, 24),
    ("Walk-Behind Lawn Mowers", 100, 23),
    ("Birdhouses", 15, 3),
    ("Feeders", 100, 24),
    ("Snow Shovels", 100, 24),
];

const PATHS: &[(&str, &[&str])] = &[
    ("Backpacking Packs", &["Sports and Outdoors", "Outdoor Recreation", "Camping and Hiking", "Backpacking Packs"]),
    ("Tents", &["Sports and Outdoors", "Outdoor Recreation", "Camping and Hiking", "Tents"]),
    ("Bikes", &["Sports and Outdoors", "Outdoor Recreation", "Cycling", "Bikes"]),
    ("Jackets", &["Sports and Outdoors", "Outdoor Recreation", "Outdoor Clothing", "Jackets"]),
    ("Vacuums", &["Home and Kitchen", "Vacuums and Floor Care", "Vacuums"]),
    ("Blenders", &["Home and Kitchen", "Kitchen and Dining", "Small Appliances", "Blenders"]),
    ("Espresso Machines", &["Home and Kitchen", "Kitchen and Dining", "Coffee, Tea and Espresso", "Espresso Machines"]),
    ("Grills", &["Patio, Lawn and Garden", "Grills and Outdoor Cooking", "Grills"]),
    ("Walk-Behind Lawn Mowers", &["Patio, Lawn and Garden", "Lawn Mowers and Outdoor Power Tools", "Walk-Behind Lawn Mowers"]),
    ("Birdhouses", &["Patio, Lawn and Garden", "Birding and Wildlife", "Birdhouses"]),
    ("Feeders", &["Patio, Lawn and Garden", "Birding and Wildlife", "Feeders"]),
    ("Snow Shovels", &["Patio, Lawn and Garden", "Snow Removal", "Snow Shovels"]),
];

const ASPECTS: &[&str] = &["handle", "motor", "frame", "lid", "zipper", "blade", "seat", "roof", "base", "tires"];
const VALUES: &[&str] = &["sturdy", "light", "strong", "quiet", "sharp", "solid", "compact", "durable"];
const EVALUATIVE: &[&str] = &["great", "perfect", "ideal", "good", "excellent"];
const GERUNDS: &[&str] = &[
    "commuting", "hiking", "camping", "making", "cleaning", "grilling", "clearing", "carrying", "brewing",
    "feeding", "mowing", "traveling",
];
const OBJECTS: &[&str] = &[
    "to work", "on weekends", "smoothies", "the driveway", "heavy loads", "pet hair", "small birds",
    "steep trails", "espresso at home", "a large yard",
];
const FILLER: &[&str] = &[
    "Shipping was fast.",
    "I bought this last spring.",
    "Customer service answered quickly.",
    "The box arrived a little dented.",
    "My neighbor has the same model.",
    "Assembly took about twenty minutes.",
    "Would recommend to friends.",
    "The color matches the picture.",
    "It was on sale.",
    "Bought this for my son after a long morning of searching.",
    "I paid too much for this thing.",
    "Waited for the spring sale before ordering.",
];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or_default()
}

fn usage_sentence<R: Rng>(rng: &mut R) -> String {
    let aspect = pick(rng, ASPECTS);
    let verb = if aspect.ends_with('s') { "are" } else { "is" };
    format!(
        "The {} {aspect} {verb} {} for {} {}.",
        pick(rng, VALUES),
        pick(rng, EVALUATIVE),
        pick(rng, GERUNDS),
        pick(rng, OBJECTS)
    )
}

fn plain_sentence<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.5) {
        pick(rng, FILLER).to_string()
    } else {
        format!("The {} is {}.", pick(rng, ASPECTS), pick(rng, VALUES))
    }
}

/// A dataset with the released dataset's shape: 1,115 records over twelve
/// categories, 277 of them N/A, five questions on every other record.
/// Every sentence carries a "for" + gerund clause.
pub fn synthetic_dataset(seed: u64) -> Vec<QuestionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &(category, total, na) in DATASET_SHAPE {
        let mut is_na: Vec<bool> = (0..total).map(|i| i < na).collect();
        is_na.shuffle(&mut rng);
        for flag in is_na {
            let id = format!("{:05}", out.len() + 1);
            let sentence = usage_sentence(&mut rng);
            if flag {
                out.push(na_record(&id, category, &sentence));
                continue;
            }
            let noun = category.to_lowercase();
            let questions = (0..5)
                .map(|k| {
                    format!(
                        "{} {noun} for {} {}?",
                        ["Are you looking for", "Do you want", "Would you like", "Do you need", "Are you shopping for"][k],
                        pick(&mut rng, GERUNDS),
                        pick(&mut rng, OBJECTS)
                    )
                })
                .collect();
            out.push(QuestionRecord {
                id,
                category: category.to_string(),
                sentence,
                label: RecordLabel::Questions(questions),
            });
        }
    }
    out
}

/// Counts of a generated review corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusShape {
    pub products: usize,
    pub reviews: usize,
    pub sentences: usize,
    /// Sentences written with a "for" + gerund usage clause.
    pub usage_sentences: usize,
}

/// Writes a product metadata file and a review file in the Amazon JSONL
/// layout until `sentences` sentences have been produced. About one
/// sentence in `usage_every` carries a usage clause.
pub fn write_review_corpus<M: Write, W: Write>(
    meta: &mut M,
    reviews: &mut W,
    sentences: usize,
    usage_every: usize,
    seed: u64,
) -> io::Result<CorpusShape> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = CorpusShape::default();
    let per_category = 20;
    for (c, (_, path)) in PATHS.iter().enumerate() {
        for p in 0..per_category {
            let line = json!({
                "asin": format!("S{c:02}{p:04}"),
                "title": format!("Product {p}"),
                "category": path,
            });
            writeln!(meta, "{line}")?;
            shape.products += 1;
        }
    }
    let usage_every = usage_every.max(1);
    while shape.sentences < sentences {
        let n = rng.gen_range(1..=8).min(sentences - shape.sentences);
        let mut text = String::new();
        for _ in 0..n {
            if !text.is_empty() {
                text.push(' ');
            }
            if rng.gen_range(0..usage_every) == 0 {
                text.push_str(&usage_sentence(&mut rng));
                shape.usage_sentences += 1;
            } else {
                text.push_str(&plain_sentence(&mut rng));
            }
        }
        let c = rng.gen_range(0..PATHS.len());
        let p = rng.gen_range(0..per_category);
        let line = json!({
            "reviewID": format!("S{:08}", shape.reviews),
            "asin": format!("S{c:02}{p:04}"),
            "overall": rng.gen_range(1..=5) as f64,
            "reviewText": text,
        });
        writeln!(reviews, "{line}")?;
        shape.reviews += 1;
        shape.sentences += n;
    }
    Ok(shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetStats;

    #[test]
    fn dataset_shape_totals() {
        let d = synthetic_dataset(1);
        let s = DatasetStats::of(&d);
        assert_eq!((s.total, s.na, s.applicable), (1115, 277, 838));
        assert_eq!(d, synthetic_dataset(1));
    }

    #[test]
    fn corpus_counts_add_up() {
        let (mut meta, mut reviews) = (Vec::new(), Vec::new());
        let shape = write_review_corpus(&mut meta, &mut reviews, 1000, 10, 3).unwrap();
        assert_eq!(shape.sentences, 1000);
        assert_eq!(String::from_utf8(reviews).unwrap().lines().count(), shape.reviews);
        assert_eq!(shape.products, 240);
    }
}
