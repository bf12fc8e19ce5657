//! Streaming ingestion of review and product-metadata dumps.
//!
//! Both inputs are line-delimited JSON, optionally gzip-compressed, using the
//! field names of the public Amazon review dumps (`asin`, `reviewText`,
//! `overall`; metadata `title`, `category`).

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid category config line {line}: {reason}")]
    CategoryConfig { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub parent: Option<String>,
}

impl Category {
    pub fn new(name: impl Into<String>, parent: Option<&str>) -> Self {
        Category {
            name: name.into(),
            parent: parent.map(str::to_string),
        }
    }
}

const DEFAULT_CATEGORIES: &[(&str, &str)] = &[
    ("Backpacking Packs", "Sports and Outdoors"),
    ("Tents", "Sports and Outdoors"),
    ("Bikes", "Sports and Outdoors"),
    ("Jackets", "Sports and Outdoors"),
    ("Vacuums", "Home and Kitchen"),
    ("Blenders", "Home and Kitchen"),
    ("Espresso Machines", "Home and Kitchen"),
    ("Grills", "Patio, Lawn and Garden"),
    ("Walk-Behind Lawn Mowers", "Patio, Lawn and Garden"),
    ("Birdhouses", "Patio, Lawn and Garden"),
    ("Feeders", "Patio, Lawn and Garden"),
    ("Snow Shovels", "Patio, Lawn and Garden"),
];

/// Normalized form used to compare category names: lowercase, `&` read as
/// `and`, punctuation and repeated spaces collapsed.
pub fn normalize_category(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for word in name
        .split(|c: char| !(c.is_alphanumeric() || c == '&'))
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        if word == "&" {
            out.push_str("and");
        } else {
            out.push_str(&word.to_lowercase());
        }
    }
    out
}

/// The configured set of categories. Names are unique after normalization.
#[derive(Debug, Clone)]
pub struct CategorySet {
    categories: Vec<Arc<Category>>,
    by_key: HashMap<String, usize>,
}

impl Default for CategorySet {
    /// The twelve review categories used for dataset construction.
    fn default() -> Self {
        CategorySet::new(
            DEFAULT_CATEGORIES
                .iter()
                .map(|&(n, p)| Category::new(n, Some(p))),
        )
        .expect("built-in categories are unique")
    }
}

impl CategorySet {
    pub fn new<I: IntoIterator<Item = Category>>(categories: I) -> Result<Self, CorpusError> {
        let mut set = CategorySet {
            categories: Vec::new(),
            by_key: HashMap::new(),
        };
        for (i, c) in categories.into_iter().enumerate() {
            let key = normalize_category(&c.name);
            if key.is_empty() || set.by_key.contains_key(&key) {
                return Err(CorpusError::CategoryConfig {
                    line: i + 1,
                    reason: format!("empty or duplicate category {:?}", c.name),
                });
            }
            set.by_key.insert(key, set.categories.len());
            set.categories.push(Arc::new(c));
        }
        Ok(set)
    }

    /// Parses a category list: one name per line, optionally followed by a
    /// tab and the parent category. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut cats = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, parent) = match line.split_once('\t') {
                Some((n, p)) => (n.trim(), Some(p.trim()).filter(|p| !p.is_empty())),
                None => (line, None),
            };
            if name.is_empty() {
                return Err(CorpusError::CategoryConfig {
                    line: i + 1,
                    reason: "missing category name".into(),
                });
            }
            cats.push(Category::new(name, parent));
        }
        CategorySet::new(cats)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        CategorySet::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Category>> {
        self.categories.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Category>> {
        self.by_key
            .get(&normalize_category(name))
            .map(|&i| &self.categories[i])
    }

    /// The configured category named anywhere in `path`; the deepest match
    /// wins when several configured categories appear.
    pub fn resolve<S: AsRef<str>>(&self, path: &[S]) -> Option<&Arc<Category>> {
        path.iter().rev().find_map(|p| self.get(p.as_ref()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub product_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub product_id: String,
    pub title: String,
    pub category_path: Vec<String>,
}

/// Opens a plain or gzip-compressed file, detected by its magic bytes.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>, CorpusError> {
    let unreadable = |source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    };
    let mut file = BufReader::with_capacity(1 << 16, File::open(path).map_err(unreadable)?);
    let magic = file.fill_buf().map_err(unreadable)?;
    if magic.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(file),
        )))
    } else {
        Ok(Box::new(file))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CategoryField {
    Path(Vec<String>),
    Paths(Vec<Vec<String>>),
}

#[derive(Deserialize)]
struct RawProduct {
    asin: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(alias = "categories")]
    category: Option<CategoryField>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetadataStats {
    pub records: u64,
    pub indexed: u64,
    pub duplicates: u64,
    pub missing_category: u64,
    pub outside_categories: u64,
    pub malformed: u64,
}

/// Product id to configured category.
#[derive(Debug, Clone, Default)]
pub struct ProductIndex {
    products: HashMap<String, Arc<Category>>,
    pub stats: MetadataStats,
}

impl ProductIndex {
    pub fn get(&self, product_id: &str) -> Option<&Arc<Category>> {
        self.products.get(product_id)
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn insert(&mut self, product_id: impl Into<String>, category: Arc<Category>) {
        self.products.insert(product_id.into(), category);
    }
}

pub fn build_product_index(path: &Path, categories: &CategorySet) -> Result<ProductIndex, CorpusError> {
    let reader = open_input(path)?;
    index_products(reader, categories).map_err(|source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds the product index from line-delimited metadata. The first record
/// of a duplicated product id wins; products without a category path or
/// outside the configured set are not indexed.
pub fn index_products<R: BufRead>(reader: R, categories: &CategorySet) -> io::Result<ProductIndex> {
    let mut index = ProductIndex::default();
    let mut seen: HashSet<String> = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        index.stats.records += 1;
        let parsed = match line.trim_start().starts_with('{') {
            true => serde_json::from_str::<RawProduct>(&line).ok(),
            false => None,
        };
        let Some(raw) = parsed else {
            index.stats.malformed += 1;
            continue;
        };
        let Some(asin) = raw.asin.filter(|a| !a.is_empty()) else {
            index.stats.malformed += 1;
            continue;
        };
        if !seen.insert(asin.clone()) {
            log::warn!("duplicate product id {asin}; keeping the first record");
            index.stats.duplicates += 1;
            continue;
        }
        let product = Product {
            product_id: asin,
            title: raw.title.unwrap_or_default(),
            category_path: match raw.category {
                Some(CategoryField::Path(p)) => p,
                Some(CategoryField::Paths(mut ps)) if !ps.is_empty() => ps.swap_remove(0),
                _ => Vec::new(),
            },
        };
        if product.category_path.is_empty() {
            index.stats.missing_category += 1;
            continue;
        }
        match categories.resolve(&product.category_path) {
            Some(cat) => {
                index.products.insert(product.product_id, Arc::clone(cat));
                index.stats.indexed += 1;
            }
            None => index.stats.outside_categories += 1,
        }
    }
    Ok(index)
}

#[derive(Deserialize)]
struct RawReview<'a> {
    #[serde(borrow, default)]
    asin: Option<Cow<'a, str>>,
    #[serde(rename = "reviewText", borrow, default)]
    review_text: Option<Cow<'a, str>>,
    #[serde(default)]
    overall: Option<f64>,
    #[serde(alias = "reviewID", alias = "review_id", borrow, default)]
    id: Option<Cow<'a, str>>,
}

/// Per-reason counters. Every non-blank input line lands in exactly one.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub emitted: u64,
    pub malformed: u64,
    pub unknown_product: u64,
}

impl IngestStats {
    pub fn records(&self) -> u64 {
        self.emitted + self.malformed + self.unknown_product
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.emitted += other.emitted;
        self.malformed += other.malformed;
        self.unknown_product += other.unknown_product;
    }
}

/// Why a review line was skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    Malformed,
    UnknownProduct,
}

/// A review whose product resolved to a configured category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorizedReview {
    #[serde(flatten)]
    pub review: Review,
    pub category: String,
}

/// Parses one review line. Reviews without an explicit id are named
/// `<asin>:<line>` after their 1-based line number.
pub fn parse_review(line: &str, line_no: u64, products: &ProductIndex) -> Result<(Review, Arc<Category>), Skip> {
    if !line.trim_start().starts_with('{') {
        return Err(Skip::Malformed);
    }
    let raw: RawReview = serde_json::from_str(line).map_err(|_| Skip::Malformed)?;
    let asin = raw.asin.filter(|a| !a.is_empty()).ok_or(Skip::Malformed)?;
    let text = raw.review_text.ok_or(Skip::Malformed)?;
    let text = text.trim();
    if text.is_empty() {
        return Err(Skip::Malformed);
    }
    let category = products.get(&asin).ok_or(Skip::UnknownProduct)?;
    let review_id = match raw.id.filter(|i| !i.is_empty()) {
        Some(id) => id.into_owned(),
        None => format!("{asin}:{line_no}"),
    };
    let rating = raw
        .overall
        .filter(|r| (1.0..=5.0).contains(r))
        .map(|r| r.round() as u8);
    Ok((
        Review {
            review_id,
            product_id: asin.into_owned(),
            text: text.to_string(),
            rating,
        },
        Arc::clone(category),
    ))
}

/// Streaming reader over a review dump. Memory use is bounded by the
/// longest line; skipped lines only touch the counters.
pub struct ReviewStream<'a, R> {
    reader: R,
    products: &'a ProductIndex,
    line: String,
    line_no: u64,
    stats: IngestStats,
    failed: bool,
}

impl<'a, R: BufRead> ReviewStream<'a, R> {
    pub fn new(reader: R, products: &'a ProductIndex) -> Self {
        ReviewStream {
            reader,
            products,
            line: String::new(),
            line_no: 0,
            stats: IngestStats::default(),
            failed: false,
        }
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    /// Reads up to `max` emitted reviews.
    pub fn next_chunk(&mut self, max: usize) -> io::Result<Vec<(Review, Arc<Category>)>> {
        let mut out = Vec::with_capacity(max.min(4096));
        while out.len() < max {
            match self.next() {
                Some(Ok(r)) => out.push(r),
                Some(Err(e)) => return Err(e),
                None => break,
            }
        }
        Ok(out)
    }
}

impl<R: BufRead> Iterator for ReviewStream<'_, R> {
    type Item = io::Result<(Review, Arc<Category>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
            self.line_no += 1;
            if self.line.trim().is_empty() {
                continue;
            }
            match parse_review(&self.line, self.line_no, self.products) {
                Ok(r) => {
                    self.stats.emitted += 1;
                    return Some(Ok(r));
                }
                Err(Skip::Malformed) => self.stats.malformed += 1,
                Err(Skip::UnknownProduct) => self.stats.unknown_product += 1,
            }
        }
    }
}

/// Opens `path` and streams the reviews that resolve to a configured
/// category through `products`.
pub fn load_reviews<'a>(
    path: &Path,
    products: &'a ProductIndex,
) -> Result<ReviewStream<'a, Box<dyn BufRead + Send>>, CorpusError> {
    Ok(ReviewStream::new(open_input(path)?, products))
}
