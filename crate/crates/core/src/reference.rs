//! Static reference tables: the 19 ESI disciplines, their 10 broader fields,
//! the sample country list and the ISO 3166-1 alpha-2 code table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// ESI discipline, identified by its abbreviation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Discipline {
    #[serde(rename = "SPA")]
    Spa,
    #[serde(rename = "NEU")]
    Neu,
    #[serde(rename = "PSY")]
    Psy,
    #[serde(rename = "IMM")]
    Imm,
    #[serde(rename = "CLI")]
    Cli,
    #[serde(rename = "PHA")]
    Pha,
    #[serde(rename = "PHY")]
    Phy,
    #[serde(rename = "MOL")]
    Mol,
    #[serde(rename = "BIO")]
    Bio,
    #[serde(rename = "MIC")]
    Mic,
    #[serde(rename = "PLA")]
    Pla,
    #[serde(rename = "ENV")]
    Env,
    #[serde(rename = "GEO")]
    Geo,
    #[serde(rename = "CHE")]
    Che,
    #[serde(rename = "AGR")]
    Agr,
    #[serde(rename = "MATE")]
    Mate,
    #[serde(rename = "COM")]
    Com,
    #[serde(rename = "ENG")]
    Eng,
    #[serde(rename = "MATH")]
    Math,
}

/// Broader science field grouping one or more disciplines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Field {
    SpaceScience,
    MedicineRelated,
    Physics,
    BiologyRelated,
    EnvironmentEcology,
    Geosciences,
    Chemistry,
    AgriculturalSciences,
    EngineeringRelated,
    Mathematics,
}

impl Discipline {
    /// All disciplines in table order.
    pub const ALL: [Discipline; 19] = [
        Discipline::Spa,
        Discipline::Neu,
        Discipline::Psy,
        Discipline::Imm,
        Discipline::Cli,
        Discipline::Pha,
        Discipline::Phy,
        Discipline::Mol,
        Discipline::Bio,
        Discipline::Mic,
        Discipline::Pla,
        Discipline::Env,
        Discipline::Geo,
        Discipline::Che,
        Discipline::Agr,
        Discipline::Mate,
        Discipline::Com,
        Discipline::Eng,
        Discipline::Math,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Discipline::Spa => "SPA",
            Discipline::Neu => "NEU",
            Discipline::Psy => "PSY",
            Discipline::Imm => "IMM",
            Discipline::Cli => "CLI",
            Discipline::Pha => "PHA",
            Discipline::Phy => "PHY",
            Discipline::Mol => "MOL",
            Discipline::Bio => "BIO",
            Discipline::Mic => "MIC",
            Discipline::Pla => "PLA",
            Discipline::Env => "ENV",
            Discipline::Geo => "GEO",
            Discipline::Che => "CHE",
            Discipline::Agr => "AGR",
            Discipline::Mate => "MATE",
            Discipline::Com => "COM",
            Discipline::Eng => "ENG",
            Discipline::Math => "MATH",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Discipline::Spa => "Space Science",
            Discipline::Neu => "Neuroscience & Behavior",
            Discipline::Psy => "Psychiatry/Psychology",
            Discipline::Imm => "Immunology",
            Discipline::Cli => "Clinical Medicine",
            Discipline::Pha => "Pharmacology & Toxicology",
            Discipline::Phy => "Physics",
            Discipline::Mol => "Molecular Biology & Genetics",
            Discipline::Bio => "Biology & Biochemistry",
            Discipline::Mic => "Microbiology",
            Discipline::Pla => "Plant & Animal Science",
            Discipline::Env => "Environment/Ecology",
            Discipline::Geo => "Geosciences",
            Discipline::Che => "Chemistry",
            Discipline::Agr => "Agricultural Sciences",
            Discipline::Mate => "Materials Science",
            Discipline::Com => "Computer Science",
            Discipline::Eng => "Engineering",
            Discipline::Math => "Mathematics",
        }
    }

    /// Broader field this discipline is aggregated into.
    pub fn field(self) -> Field {
        match self {
            Discipline::Spa => Field::SpaceScience,
            Discipline::Neu
            | Discipline::Psy
            | Discipline::Imm
            | Discipline::Cli
            | Discipline::Pha => Field::MedicineRelated,
            Discipline::Phy => Field::Physics,
            Discipline::Mol | Discipline::Bio | Discipline::Mic | Discipline::Pla => {
                Field::BiologyRelated
            }
            Discipline::Env => Field::EnvironmentEcology,
            Discipline::Geo => Field::Geosciences,
            Discipline::Che => Field::Chemistry,
            Discipline::Agr => Field::AgriculturalSciences,
            Discipline::Mate | Discipline::Com | Discipline::Eng => Field::EngineeringRelated,
            Discipline::Math => Field::Mathematics,
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown discipline code '{0}'")]
pub struct UnknownDiscipline(pub String);

impl FromStr for Discipline {
    type Err = UnknownDiscipline;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Discipline::ALL
            .iter()
            .copied()
            .find(|d| d.code() == s)
            .ok_or_else(|| UnknownDiscipline(s.to_string()))
    }
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::SpaceScience => "Space Science",
            Field::MedicineRelated => "Medicine related",
            Field::Physics => "Physics",
            Field::BiologyRelated => "Biology related",
            Field::EnvironmentEcology => "Environment/Ecology",
            Field::Geosciences => "Geosciences",
            Field::Chemistry => "Chemistry",
            Field::AgriculturalSciences => "Agricultural Sciences",
            Field::EngineeringRelated => "Engineering related",
            Field::Mathematics => "Mathematics",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a discipline code to its broader field.
pub fn map_field(code: &str) -> Result<Field, UnknownDiscipline> {
    code.parse::<Discipline>().map(Discipline::field)
}

/// Two-letter uppercase country code from the bundled ISO 3166-1 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Country([u8; 2]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown country code '{0}'")]
pub struct UnknownCountry(pub String);

impl Country {
    pub fn as_str(&self) -> &str {
        // Only constructed from ASCII codes in ISO_3166_ALPHA2.
        std::str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl FromStr for Country {
    type Err = UnknownCountry;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() == 2 && ISO_3166_ALPHA2.binary_search(&s).is_ok() {
            Ok(Country([bytes[0], bytes[1]]))
        } else {
            Err(UnknownCountry(s.to_string()))
        }
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Country {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Country {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// G7 followed by BRICS, in table order.
pub const SAMPLE_COUNTRIES: [&str; 12] = [
    "CA", "DE", "FR", "GB", "IT", "JP", "US", "BR", "CN", "IN", "RU", "ZA",
];

pub fn sample_countries() -> Vec<Country> {
    SAMPLE_COUNTRIES
        .iter()
        .map(|c| {
            c.parse()
                .expect("sample country codes are in the ISO table")
        })
        .collect()
}

/// ISO 3166-1 alpha-2 officially assigned codes, sorted.
pub const ISO_3166_ALPHA2: [&str; 249] = [
    "AD", "AE", "AF", "AG", "AI", "AL", "AM", "AO", "AQ", "AR", "AS", "AT", "AU", "AW", "AX", "AZ",
    "BA", "BB", "BD", "BE", "BF", "BG", "BH", "BI", "BJ", "BL", "BM", "BN", "BO", "BQ", "BR", "BS",
    "BT", "BV", "BW", "BY", "BZ", "CA", "CC", "CD", "CF", "CG", "CH", "CI", "CK", "CL", "CM", "CN",
    "CO", "CR", "CU", "CV", "CW", "CX", "CY", "CZ", "DE", "DJ", "DK", "DM", "DO", "DZ", "EC", "EE",
    "EG", "EH", "ER", "ES", "ET", "FI", "FJ", "FK", "FM", "FO", "FR", "GA", "GB", "GD", "GE", "GF",
    "GG", "GH", "GI", "GL", "GM", "GN", "GP", "GQ", "GR", "GS", "GT", "GU", "GW", "GY", "HK", "HM",
    "HN", "HR", "HT", "HU", "ID", "IE", "IL", "IM", "IN", "IO", "IQ", "IR", "IS", "IT", "JE", "JM",
    "JO", "JP", "KE", "KG", "KH", "KI", "KM", "KN", "KP", "KR", "KW", "KY", "KZ", "LA", "LB", "LC",
    "LI", "LK", "LR", "LS", "LT", "LU", "LV", "LY", "MA", "MC", "MD", "ME", "MF", "MG", "MH", "MK",
    "ML", "MM", "MN", "MO", "MP", "MQ", "MR", "MS", "MT", "MU", "MV", "MW", "MX", "MY", "MZ", "NA",
    "NC", "NE", "NF", "NG", "NI", "NL", "NO", "NP", "NR", "NU", "NZ", "OM", "PA", "PE", "PF", "PG",
    "PH", "PK", "PL", "PM", "PN", "PR", "PS", "PT", "PW", "PY", "QA", "RE", "RO", "RS", "RU", "RW",
    "SA", "SB", "SC", "SD", "SE", "SG", "SH", "SI", "SJ", "SK", "SL", "SM", "SN", "SO", "SR", "SS",
    "ST", "SV", "SX", "SY", "SZ", "TC", "TD", "TF", "TG", "TH", "TJ", "TK", "TL", "TM", "TN", "TO",
    "TR", "TT", "TV", "TW", "TZ", "UA", "UG", "UM", "US", "UY", "UZ", "VA", "VC", "VE", "VG", "VI",
    "VN", "VU", "WF", "WS", "YE", "YT", "ZA", "ZM", "ZW",
];
