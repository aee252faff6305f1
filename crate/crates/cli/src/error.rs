use eventshot_core::baseline::BaselineError;
use eventshot_core::eval::EvalError;
use eventshot_core::facegeom::FaceGeomError;
use eventshot_core::hygiene::HygieneError;
use eventshot_core::media::MediaError;
use eventshot_core::model::ModelError;
use eventshot_core::providers::embfile::EmbFileError;
use eventshot_core::providers::ProviderError;
use eventshot_core::retrieval::RetrievalError;
use eventshot_core::shotlist::ShotListError;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_DATA: i32 = 4;

/// Missing or inconsistent stage input.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct DataError(pub String);

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ProviderError>() {
            return EXIT_PROVIDER;
        }
        if let Some(e) = cause.downcast_ref::<ShotListError>() {
            return match e {
                ShotListError::Provider(_) => EXIT_PROVIDER,
                _ => EXIT_DATA,
            };
        }
        if cause.is::<DataError>()
            || cause.is::<ModelError>()
            || cause.is::<HygieneError>()
            || cause.is::<RetrievalError>()
            || cause.is::<BaselineError>()
            || cause.is::<FaceGeomError>()
            || cause.is::<EmbFileError>()
            || cause.is::<MediaError>()
            || cause.is::<EvalError>()
        {
            return EXIT_DATA;
        }
    }
    EXIT_FAILURE
}
