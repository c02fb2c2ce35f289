//! Name-keyed collections of trait objects.

/// Anything a [`Registry`] can look up.
pub trait Named {
    fn name(&self) -> &str;

    fn aliases(&self) -> &[&str] {
        &[]
    }
}

/// Insertion-ordered set of boxed strategies, looked up by name or alias.
pub struct Registry<T: ?Sized> {
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new() -> Self {
        Registry {
            entries: Vec::new(),
        }
    }

    /// Adds an entry, replacing any earlier entry of the same name.
    pub fn register(&mut self, entry: Box<T>) {
        match self.entries.iter().position(|e| e.name() == entry.name()) {
            Some(i) => self.entries[i] = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn get(&self, key: &str) -> Option<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == key || e.aliases().contains(&key))
            .map(|e| e.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves a comma-separated selection; `all` (or an empty string)
    /// selects everything. Unknown names are returned as the error.
    pub fn select(&self, spec: &str) -> Result<Vec<&T>, String> {
        let spec = spec.trim();
        if spec.is_empty() || spec == "all" {
            return Ok(self.iter().collect());
        }
        spec.split(',')
            .map(str::trim)
            .map(|key| self.get(key).ok_or_else(|| key.to_string()))
            .collect()
    }
}

impl<T: ?Sized + Named> Default for Registry<T> {
    fn default() -> Self {
        Self::new()
    }
}
