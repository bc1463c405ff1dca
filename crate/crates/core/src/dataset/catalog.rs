use std::collections::HashMap;
use std::sync::Arc;

use super::{DatasetError, ItemId};

/// Category assigned to items whose genre field is empty.
pub const UNKNOWN_CATEGORY: &str = "Unknown";

#[derive(Debug, Clone)]
struct Entry {
    title: String,
    categories: Vec<usize>,
}

/// Item to category-set map. Categories are numbered in first-seen order and
/// every item carries at least one category.
#[derive(Debug, Clone, Default)]
pub struct ItemCatalog {
    categories: Vec<String>,
    shared: Arc<[String]>,
    category_lookup: HashMap<String, usize>,
    entries: HashMap<ItemId, Entry>,
}

impl ItemCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Convenience constructor from `(item, genres)` pairs with empty titles.
    pub fn from_genres<'a, I, G>(items: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (u32, G)>,
        G: IntoIterator<Item = &'a str>,
    {
        let mut catalog = Self::new();
        for (pos, (item, genres)) in items.into_iter().enumerate() {
            catalog.insert(pos + 1, ItemId(item), String::new(), genres)?;
        }
        Ok(catalog)
    }

    /// Adds an item. Blank genre labels are dropped; an item left with none gets
    /// [`UNKNOWN_CATEGORY`]. `line` is only used for error reporting.
    pub fn insert<'a, G>(
        &mut self,
        line: usize,
        item: ItemId,
        title: String,
        genres: G,
    ) -> Result<(), DatasetError>
    where
        G: IntoIterator<Item = &'a str>,
    {
        if self.entries.contains_key(&item) {
            return Err(DatasetError::DuplicateItem { line, item });
        }
        let mut categories = Vec::new();
        for genre in genres.into_iter().map(str::trim).filter(|g| !g.is_empty()) {
            let id = self.category_id(genre);
            if !categories.contains(&id) {
                categories.push(id);
            }
        }
        if categories.is_empty() {
            categories.push(self.category_id(UNKNOWN_CATEGORY));
        }
        self.entries.insert(item, Entry { title, categories });
        Ok(())
    }

    fn category_id(&mut self, label: &str) -> usize {
        if let Some(&id) = self.category_lookup.get(label) {
            return id;
        }
        let id = self.categories.len();
        self.categories.push(label.to_owned());
        self.category_lookup.insert(label.to_owned(), id);
        self.shared = self.categories.clone().into();
        id
    }

    /// All category labels, in first-seen order.
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub(crate) fn shared_categories(&self) -> Arc<[String]> {
        Arc::clone(&self.shared)
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.category_lookup.get(label).copied()
    }

    /// Category indices of `item`, or `None` when the item is not catalogued.
    pub fn item_categories(&self, item: ItemId) -> Option<&[usize]> {
        self.entries.get(&item).map(|e| e.categories.as_slice())
    }

    pub fn title(&self, item: ItemId) -> Option<&str> {
        self.entries.get(&item).map(|e| e.title.as_str())
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.entries.contains_key(&item)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Catalogued items in ascending identifier order.
    pub fn items(&self) -> Vec<ItemId> {
        let mut items: Vec<ItemId> = self.entries.keys().copied().collect();
        items.sort_unstable();
        items
    }
}
