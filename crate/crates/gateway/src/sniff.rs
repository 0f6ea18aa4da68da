//! Payload-kind sniffing. Magic bytes take precedence over whatever
//! content type the sender declared; the declared type only matters for
//! telling an XML object message apart from arbitrary text. The verdict
//! depends on nothing beyond the declared type and the first eight
//! payload bytes.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Jpeg,
    Png,
    Pgm,
    Ppm,
    XmlMessage,
    Unknown,
}

impl MediaKind {
    pub fn is_image(self) -> bool {
        matches!(
            self,
            MediaKind::Jpeg | MediaKind::Png | MediaKind::Pgm | MediaKind::Ppm
        )
    }

    /// Canonical file extension for stored frames.
    pub fn extension(self) -> &'static str {
        match self {
            MediaKind::Jpeg => "jpg",
            MediaKind::Png => "png",
            MediaKind::Pgm => "pgm",
            MediaKind::Ppm => "ppm",
            MediaKind::XmlMessage => "xml",
            MediaKind::Unknown => "bin",
        }
    }
}

pub fn sniff_mime(declared_type: Option<&str>, payload: &[u8]) -> MediaKind {
    let prefix = &payload[..payload.len().min(8)];
    if prefix.starts_with(&[0xFF, 0xD8, 0xFF]) {
        MediaKind::Jpeg
    } else if prefix.starts_with(&[0x89, b'P', b'N', b'G']) {
        MediaKind::Png
    } else if prefix.starts_with(b"P5") {
        MediaKind::Pgm
    } else if prefix.starts_with(b"P6") {
        MediaKind::Ppm
    } else if prefix.first() == Some(&b'<') && declares_xml(declared_type) {
        MediaKind::XmlMessage
    } else {
        MediaKind::Unknown
    }
}

fn declares_xml(declared_type: Option<&str>) -> bool {
    declared_type.is_some_and(|t| t.to_ascii_lowercase().contains("xml"))
}
