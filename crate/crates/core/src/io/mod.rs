//! File formats: GML traces, images, SVG, and JSON plans and trajectories.

pub mod gml;
pub mod image;
pub mod json;
pub mod svg;

pub use self::gml::{concatenate, export_gml, parse_gml, parse_gml_with, ConcatenatedTrace, GmlDocument, GmlOptions};
pub use self::image::{decode_image, decode_pgm, encode_pgm, encode_png, read_image, write_image};
pub use self::json::{parse_plan, parse_trajectory, serialize_plan, serialize_trajectory};
pub use self::svg::{export_svg, parse_svg_paths, SvgSegment};
