//! Publishing toolkit for classified archaeological survey features.
//!
//! The crate ingests georeferenced funerary records, indexes them by facet,
//! serves them as Atom/KML/GeoJSON feeds, interpolates cultural zones by
//! barrier-constrained diffusion, and exports narratives to web, print (with
//! QR codes) and epub.

pub mod cli;
pub mod diffusion;
pub mod export;
pub mod facet;
pub mod feeds;
pub mod ingest;
pub mod model;
pub mod pngio;
pub mod qr;
pub mod server;
pub mod workspace;

pub use facet::{BBox, FacetIndex, FilterSet, ResultPage};
pub use model::{classify, persistent_uri, CulturalAffiliation, DatasetManifest, GeoPoint, SiteContext, SurveyFeature, TombType};
