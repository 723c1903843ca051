//! Authorship taxonomy: single / national multi-affiliated / international
//! multi-affiliated authors, publication-level flags and the country
//! (domestic vs. foreign) perspective.

use std::collections::BTreeSet;
use std::fmt;

use crate::ingest::{AuthorRecord, Publication};
use crate::reference::Country;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuthorClass {
    /// Single institution.
    S,
    /// Two or more institutions, all in one country.
    NM,
    /// Institutions spanning two or more countries.
    IM,
}

impl fmt::Display for AuthorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuthorClass::S => "S",
            AuthorClass::NM => "NM",
            AuthorClass::IM => "IM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CountryAuthorClass {
    NmDomestic,
    NmForeign,
    ImDomestic,
    ImForeign,
    SDomestic,
    SForeign,
}

impl CountryAuthorClass {
    pub const ALL: [CountryAuthorClass; 6] = [
        CountryAuthorClass::NmDomestic,
        CountryAuthorClass::NmForeign,
        CountryAuthorClass::ImDomestic,
        CountryAuthorClass::ImForeign,
        CountryAuthorClass::SDomestic,
        CountryAuthorClass::SForeign,
    ];

    pub fn base(self) -> AuthorClass {
        match self {
            CountryAuthorClass::NmDomestic | CountryAuthorClass::NmForeign => AuthorClass::NM,
            CountryAuthorClass::ImDomestic | CountryAuthorClass::ImForeign => AuthorClass::IM,
            CountryAuthorClass::SDomestic | CountryAuthorClass::SForeign => AuthorClass::S,
        }
    }

    pub fn is_domestic(self) -> bool {
        matches!(
            self,
            CountryAuthorClass::NmDomestic
                | CountryAuthorClass::ImDomestic
                | CountryAuthorClass::SDomestic
        )
    }

    fn from_parts(base: AuthorClass, domestic: bool) -> Self {
        match (base, domestic) {
            (AuthorClass::NM, true) => CountryAuthorClass::NmDomestic,
            (AuthorClass::NM, false) => CountryAuthorClass::NmForeign,
            (AuthorClass::IM, true) => CountryAuthorClass::ImDomestic,
            (AuthorClass::IM, false) => CountryAuthorClass::ImForeign,
            (AuthorClass::S, true) => CountryAuthorClass::SDomestic,
            (AuthorClass::S, false) => CountryAuthorClass::SForeign,
        }
    }
}

impl fmt::Display for CountryAuthorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountryAuthorClass::NmDomestic => "NM_Domestic",
            CountryAuthorClass::NmForeign => "NM_Foreign",
            CountryAuthorClass::ImDomestic => "IM_Domestic",
            CountryAuthorClass::ImForeign => "IM_Foreign",
            CountryAuthorClass::SDomestic => "S_Domestic",
            CountryAuthorClass::SForeign => "S_Foreign",
        })
    }
}

/// Publication-level flags. A publication is in P_M when either flag is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PubClass {
    pub has_nm: bool,
    pub has_im: bool,
}

impl PubClass {
    pub fn is_multi(self) -> bool {
        self.has_nm || self.has_im
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DomesticFlags {
    pub p_nm_domestic: bool,
    pub p_im_domestic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ForeignFlags {
    pub p_nm_foreign: bool,
    pub p_im_foreign: bool,
}

/// Which multi-affiliation flavour a share or regression refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MultiKind {
    NM,
    IM,
}

impl MultiKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MultiKind::NM => "NM",
            MultiKind::IM => "IM",
        }
    }

    pub fn pick_pub(self, class: PubClass) -> bool {
        match self {
            MultiKind::NM => class.has_nm,
            MultiKind::IM => class.has_im,
        }
    }

    pub fn pick_domestic(self, flags: DomesticFlags) -> bool {
        match self {
            MultiKind::NM => flags.p_nm_domestic,
            MultiKind::IM => flags.p_im_domestic,
        }
    }
}

impl fmt::Display for MultiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Distinct institutions and countries of one author's affiliations.
struct AuthorFootprint<'a> {
    institutions: BTreeSet<&'a str>,
    countries: BTreeSet<Country>,
}

fn footprint<'a>(publication: &'a Publication, author: &'a AuthorRecord) -> AuthorFootprint<'a> {
    let mut institutions = BTreeSet::new();
    let mut countries = BTreeSet::new();
    for aff in publication.author_affiliations(author) {
        institutions.insert(aff.inst_id.as_str());
        countries.insert(aff.country);
    }
    AuthorFootprint {
        institutions,
        countries,
    }
}

fn class_of(fp: &AuthorFootprint<'_>) -> AuthorClass {
    if fp.countries.len() >= 2 {
        AuthorClass::IM
    } else if fp.institutions.len() >= 2 {
        AuthorClass::NM
    } else {
        AuthorClass::S
    }
}

/// Classifies one author of `publication`; `author.affs` index into its
/// affiliation list.
pub fn classify_author(publication: &Publication, author: &AuthorRecord) -> AuthorClass {
    class_of(&footprint(publication, author))
}

pub fn classify_publication(publication: &Publication) -> PubClass {
    let mut class = PubClass::default();
    for author in &publication.authors {
        match classify_author(publication, author) {
            AuthorClass::NM => class.has_nm = true,
            AuthorClass::IM => class.has_im = true,
            AuthorClass::S => {}
        }
    }
    class
}

/// Domestic iff `country` is among the author's affiliation countries.
pub fn classify_author_for_country(
    publication: &Publication,
    author: &AuthorRecord,
    country: Country,
) -> CountryAuthorClass {
    let fp = footprint(publication, author);
    CountryAuthorClass::from_parts(class_of(&fp), fp.countries.contains(&country))
}

pub fn domestic_flags(publication: &Publication, country: Country) -> DomesticFlags {
    let mut flags = DomesticFlags::default();
    for author in &publication.authors {
        match classify_author_for_country(publication, author, country) {
            CountryAuthorClass::NmDomestic => flags.p_nm_domestic = true,
            CountryAuthorClass::ImDomestic => flags.p_im_domestic = true,
            _ => {}
        }
    }
    flags
}

pub fn foreign_flags(publication: &Publication, country: Country) -> ForeignFlags {
    let mut flags = ForeignFlags::default();
    for author in &publication.authors {
        match classify_author_for_country(publication, author, country) {
            CountryAuthorClass::NmForeign => flags.p_nm_foreign = true,
            CountryAuthorClass::ImForeign => flags.p_im_foreign = true,
            _ => {}
        }
    }
    flags
}
