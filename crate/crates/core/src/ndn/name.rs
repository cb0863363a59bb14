use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const SEGMENT_PREFIX: &str = "seg=";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NameError {
    #[error("a name needs at least one component")]
    Empty,
    #[error("names start with '/'")]
    NotAbsolute,
    #[error("invalid component {0:?}")]
    InvalidComponent(String),
    #[error("invalid segment suffix {0:?}")]
    InvalidSegment(String),
}

/// Hierarchical content name, `/c1/c2/...` with an optional `/seg=<i>` suffix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    components: Vec<String>,
    segment: Option<u64>,
}

fn check_component(c: &str) -> Result<(), NameError> {
    if c.is_empty() || c.contains('/') || c.starts_with(SEGMENT_PREFIX) {
        return Err(NameError::InvalidComponent(c.to_string()));
    }
    Ok(())
}

impl Name {
    pub fn new<I, S>(components: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let components: Vec<String> = components.into_iter().map(Into::into).collect();
        if components.is_empty() {
            return Err(NameError::Empty);
        }
        for c in &components {
            check_component(c)?;
        }
        Ok(Name { components, segment: None })
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn segment(&self) -> Option<u64> {
        self.segment
    }

    pub fn with_segment(&self, index: u64) -> Name {
        Name { components: self.components.clone(), segment: Some(index) }
    }

    pub fn without_segment(&self) -> Name {
        Name { components: self.components.clone(), segment: None }
    }

    pub fn child(&self, component: &str) -> Result<Name, NameError> {
        check_component(component)?;
        let mut components = self.components.clone();
        components.push(component.to_string());
        Ok(Name { components, segment: self.segment })
    }

    /// Component-wise prefix test; a segmented name is a prefix only of
    /// the same segment.
    pub fn is_prefix_of(&self, other: &Name) -> bool {
        if self.components.len() > other.components.len()
            || self.components[..] != other.components[..self.components.len()]
        {
            return false;
        }
        match self.segment {
            None => true,
            Some(_) => self.components.len() == other.components.len() && self.segment == other.segment,
        }
    }

    /// Number of name levels, counting the segment suffix as one.
    pub fn depth(&self) -> usize {
        self.components.len() + usize::from(self.segment.is_some())
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            write!(f, "/{c}")?;
        }
        if let Some(i) = self.segment {
            write!(f, "/{SEGMENT_PREFIX}{i}")?;
        }
        Ok(())
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, NameError> {
        let rest = s.strip_prefix('/').ok_or(NameError::NotAbsolute)?;
        if rest.is_empty() {
            return Err(NameError::Empty);
        }
        let mut parts: Vec<&str> = rest.split('/').collect();
        let mut segment = None;
        if parts.len() > 1 {
            let last = parts[parts.len() - 1];
            if let Some(digits) = last.strip_prefix(SEGMENT_PREFIX) {
                let canonical = digits.parse::<u64>().ok().filter(|v| v.to_string() == digits);
                segment = Some(canonical.ok_or_else(|| NameError::InvalidSegment(last.to_string()))?);
                parts.pop();
            }
        }
        let mut name = Name::new(parts)?;
        name.segment = segment;
        Ok(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_form() {
        let n: Name = "/data/file50M.bin".parse().unwrap();
        assert_eq!(n.components(), ["data", "file50M.bin"]);
        assert_eq!(n.with_segment(7).to_string(), "/data/file50M.bin/seg=7");
        let s: Name = "/data/file50M.bin/seg=7".parse().unwrap();
        assert_eq!(s, n.with_segment(7));
        assert_eq!(s.without_segment(), n);
    }

    #[test]
    fn rejects_bad_names() {
        for bad in ["", "/", "data", "/a//b", "/a/", "/a/seg=", "/a/seg=01", "/a/seg=x", "/seg=1", "/a/seg=1/b"] {
            assert!(bad.parse::<Name>().is_err(), "{bad:?}");
        }
        assert!(Name::new(Vec::<String>::new()).is_err());
        assert!(Name::new(["a/b"]).is_err());
    }

    #[test]
    fn prefixes() {
        let a: Name = "/data".parse().unwrap();
        let b: Name = "/data/x".parse().unwrap();
        assert!(a.is_prefix_of(&b));
        assert!(a.is_prefix_of(&b.with_segment(3)));
        assert!(!b.is_prefix_of(&a));
        assert!(!"/dat".parse::<Name>().unwrap().is_prefix_of(&b));
        assert!(b.with_segment(3).is_prefix_of(&b.with_segment(3)));
        assert!(!b.with_segment(3).is_prefix_of(&b.with_segment(4)));
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(
            comps in proptest::collection::vec("[a-zA-Z0-9._=-]{1,8}", 1..5),
            seg in proptest::option::of(any::<u64>()),
        ) {
            prop_assume!(comps.iter().all(|c| !c.starts_with("seg=")));
            let mut n = Name::new(comps).unwrap();
            if let Some(i) = seg {
                n = n.with_segment(i);
            }
            prop_assert_eq!(n.to_string().parse::<Name>().unwrap(), n);
        }
    }
}
