//! CAD model ingestion: OBJ loading, material filtering and surface sampling.

pub mod mesh;
pub mod obj;
pub mod sample;

pub use mesh::{material_excluded, remove_materials, TriangleMesh, DEFAULT_MATERIAL};
pub use obj::{load_mesh, parse_obj, to_obj_string};
pub use sample::{effective_distance, sample_surface, SampledCloud, SamplingConfig};
