//! C ABI for the trilocal library.
//!
//! Distributions and models are opaque handles created and destroyed by
//! this library; every fallible call returns a [`TlStatus`] code and leaves
//! a human-readable message retrievable with [`tl_last_error_message`].
//! Handles are immutable after creation and safe to share across threads;
//! the error message store is thread-local.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use trilocal::analysis::{brute_force_local_distance, euclidean_distance, OracleOptions};
use trilocal::qdist::{Distribution, Family, FamilySpec};
use trilocal::trainer::{
    fit_model, load_model, model_distribution, save_model, Activation, LatentBatch, Loss, Party,
    TrainConfig, TriangleModel,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    TlOk = 0,
    TlErrInvalidArgument = 1,
    TlErrIo = 2,
    TlErrParse = 3,
    TlErrTrain = 4,
    TlErrUnsupported = 5,
    TlErrNullPointer = 6,
    TlErrPanic = 7,
}

/// Target distribution families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlFamily {
    TlFamilyFritzVisibility = 0,
    TlFamilyElegantVisibility = 1,
    TlFamilyElegantDetector = 2,
    TlFamilyRenouScan = 3,
    TlFamilyRenouVisibility = 4,
    TlFamilyRenouDetector = 5,
}

/// Parties of the triangle.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlParty {
    TlPartyA = 0,
    TlPartyB = 1,
    TlPartyC = 2,
}

/// Training hyperparameters; obtain defaults from
/// [`tl_train_config_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TlTrainConfig {
    pub batch_size: usize,
    pub depth: usize,
    pub width: usize,
    /// 0 = rectified linear, 1 = tanh.
    pub activation: i32,
    /// 0 = relative entropy, 1 = mean squared error, 2 = mean absolute.
    pub loss: i32,
    pub learning_rate: f64,
    pub training_steps: usize,
    pub restarts: usize,
    pub eval_batch_size: usize,
    pub rng_seed: u64,
    pub eval_seed: u64,
}

/// Opaque probability distribution over the parties' joint outcomes.
pub struct TlDistribution {
    inner: Distribution,
}

/// Opaque trained triangle model.
pub struct TlModel {
    model: TriangleModel,
    config: TrainConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn guard<F: FnOnce() -> TlStatus>(f: F) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TlStatus::TlErrPanic
        }
    }
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn path_from<'a>(ptr: *const c_char) -> Result<&'a Path, TlStatus> {
    if ptr.is_null() {
        set_error("null path");
        return Err(TlStatus::TlErrNullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(TlStatus::TlErrInvalidArgument)
        }
    }
}

fn family_spec(family: TlFamily, u_squared: f64) -> Result<FamilySpec, TlStatus> {
    let family = match family {
        TlFamily::TlFamilyFritzVisibility => Family::FritzVisibility,
        TlFamily::TlFamilyElegantVisibility => Family::ElegantVisibility,
        TlFamily::TlFamilyElegantDetector => Family::ElegantDetector,
        TlFamily::TlFamilyRenouScan => Family::RenouScan,
        TlFamily::TlFamilyRenouVisibility => Family::RenouVisibility,
        TlFamily::TlFamilyRenouDetector => Family::RenouDetector,
    };
    let u2 = if u_squared.is_nan() { None } else { Some(u_squared) };
    FamilySpec::new(family, u2).map_err(|e| {
        set_error(&e.to_string());
        TlStatus::TlErrInvalidArgument
    })
}

/// Generates a family target. `u_squared` selects the measurement for the
/// Renou families (pass NAN when not applicable); `v` is the curve
/// parameter (the scan coordinate itself for the Renou scan).
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle that must
/// be released with [`tl_distribution_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_family_target(
    family: TlFamily,
    u_squared: f64,
    v: f64,
    out: *mut *mut TlDistribution,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        let spec = match family_spec(family, u_squared) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match spec.target(v) {
            Ok(dist) => {
                *out = Box::into_raw(Box::new(TlDistribution { inner: dist }));
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrInvalidArgument
            }
        }
    })
}

/// Reads a distribution from a CSV or JSON file (chosen by extension).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_distribution_read_file(
    path: *const c_char,
    out: *mut *mut TlDistribution,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match Distribution::read_file(path) {
            Ok(dist) => {
                *out = Box::into_raw(Box::new(TlDistribution { inner: dist }));
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrParse
            }
        }
    })
}

/// Writes a distribution to a CSV or JSON file (chosen by extension).
///
/// # Safety
/// `dist` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_distribution_write_file(
    dist: *const TlDistribution,
    path: *const c_char,
) -> TlStatus {
    guard(|| {
        let Some(dist) = dist.as_ref() else {
            set_error("null distribution");
            return TlStatus::TlErrNullPointer;
        };
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match dist.inner.write_file(path) {
            Ok(()) => TlStatus::TlOk,
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrIo
            }
        }
    })
}

/// Outcomes per party, or 0 for a null handle.
///
/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_distribution_cardinality(dist: *const TlDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.inner.cardinality())
}

/// Number of joint outcomes (`cardinality^3`), or 0 for a null handle.
///
/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_distribution_len(dist: *const TlDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.inner.len())
}

/// Copies the flat probability vector (index `a*o^2 + b*o + c`) into `buf`.
///
/// # Safety
/// `buf` must point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_distribution_probs(
    dist: *const TlDistribution,
    buf: *mut f64,
    len: usize,
) -> TlStatus {
    guard(|| {
        let Some(dist) = dist.as_ref() else {
            set_error("null distribution");
            return TlStatus::TlErrNullPointer;
        };
        if buf.is_null() {
            set_error("null buffer");
            return TlStatus::TlErrNullPointer;
        }
        if len < dist.inner.len() {
            set_error("buffer too small");
            return TlStatus::TlErrInvalidArgument;
        }
        std::ptr::copy_nonoverlapping(dist.inner.probs().as_ptr(), buf, dist.inner.len());
        TlStatus::TlOk
    })
}

/// Releases a distribution handle; null is ignored.
///
/// # Safety
/// `dist` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tl_distribution_free(dist: *mut TlDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Euclidean distance between two distributions of equal cardinality.
///
/// # Safety
/// Handles must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_euclidean_distance(
    left: *const TlDistribution,
    right: *const TlDistribution,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let (Some(l), Some(r)) = (left.as_ref(), right.as_ref()) else {
            set_error("null distribution");
            return TlStatus::TlErrNullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        match euclidean_distance(&l.inner, &r.inner) {
            Ok(d) => {
                *out = d;
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrInvalidArgument
            }
        }
    })
}

/// Default training configuration.
#[no_mangle]
pub extern "C" fn tl_train_config_default() -> TlTrainConfig {
    let cfg = TrainConfig::default();
    TlTrainConfig {
        batch_size: cfg.batch_size,
        depth: cfg.depth,
        width: cfg.width,
        activation: 0,
        loss: 0,
        learning_rate: cfg.learning_rate,
        training_steps: cfg.training_steps,
        restarts: cfg.restarts,
        eval_batch_size: cfg.eval_batch_size,
        rng_seed: cfg.rng_seed,
        eval_seed: cfg.eval_seed,
    }
}

fn train_config_from(c: &TlTrainConfig) -> Result<TrainConfig, TlStatus> {
    let activation = match c.activation {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        _ => {
            set_error("activation must be 0 (relu) or 1 (tanh)");
            return Err(TlStatus::TlErrInvalidArgument);
        }
    };
    let loss = match c.loss {
        0 => Loss::Kl,
        1 => Loss::Mse,
        2 => Loss::Mae,
        _ => {
            set_error("loss must be 0 (kl), 1 (mse), or 2 (mae)");
            return Err(TlStatus::TlErrInvalidArgument);
        }
    };
    let cfg = TrainConfig {
        batch_size: c.batch_size,
        depth: c.depth,
        width: c.width,
        hidden_activation: activation,
        loss,
        learning_rate: c.learning_rate,
        training_steps: c.training_steps,
        restarts: c.restarts,
        eval_batch_size: c.eval_batch_size,
        rng_seed: c.rng_seed,
        eval_seed: c.eval_seed,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| {
        set_error(&e.to_string());
        TlStatus::TlErrInvalidArgument
    })?;
    Ok(cfg)
}

/// Trains the constrained network against a target and returns the best
/// model over the configured restarts together with its evaluation
/// distance. Pass a null `cfg` for defaults.
///
/// # Safety
/// `target` must be a live handle; `out_model` and `out_distance` must be
/// valid pointers. The returned handle must be freed with [`tl_model_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_fit_model(
    target: *const TlDistribution,
    cfg: *const TlTrainConfig,
    out_model: *mut *mut TlModel,
    out_distance: *mut f64,
) -> TlStatus {
    guard(|| {
        let Some(target) = target.as_ref() else {
            set_error("null target");
            return TlStatus::TlErrNullPointer;
        };
        if out_model.is_null() || out_distance.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        let config = match cfg.as_ref() {
            None => TrainConfig::default(),
            Some(c) => match train_config_from(c) {
                Ok(cfg) => cfg,
                Err(status) => return status,
            },
        };
        match fit_model(&target.inner, &config, None) {
            Ok(outcome) => {
                *out_distance = outcome.distance;
                *out_model =
                    Box::into_raw(Box::new(TlModel { model: outcome.model, config }));
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrTrain
            }
        }
    })
}

/// Response probabilities of one party for a latent pair; `len` must be at
/// least the model's outcome cardinality.
///
/// # Safety
/// `model` must be a live handle; `probs` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_model_forward(
    model: *const TlModel,
    party: TlParty,
    latent1: f64,
    latent2: f64,
    probs: *mut f64,
    len: usize,
) -> TlStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            set_error("null model");
            return TlStatus::TlErrNullPointer;
        };
        if probs.is_null() {
            set_error("null buffer");
            return TlStatus::TlErrNullPointer;
        }
        let o = model.model.cardinality();
        if len < o {
            set_error("buffer too small");
            return TlStatus::TlErrInvalidArgument;
        }
        let party = match party {
            TlParty::TlPartyA => Party::A,
            TlParty::TlPartyB => Party::B,
            TlParty::TlPartyC => Party::C,
        };
        let out = model.model.net(party).forward([latent1, latent2]);
        std::ptr::copy_nonoverlapping(out.as_ptr(), probs, o);
        TlStatus::TlOk
    })
}

/// Monte Carlo estimate of the model's joint distribution from `samples`
/// fresh latent triples drawn with `seed`.
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid pointer and the
/// result freed with [`tl_distribution_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_model_distribution(
    model: *const TlModel,
    seed: u64,
    samples: usize,
    out: *mut *mut TlDistribution,
) -> TlStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            set_error("null model");
            return TlStatus::TlErrNullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let batch = LatentBatch::sample(samples, &mut rng);
        match model_distribution(&model.model, &batch) {
            Ok(dist) => {
                *out = Box::into_raw(Box::new(TlDistribution { inner: dist }));
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrInvalidArgument
            }
        }
    })
}

/// Outcomes per party, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_model_cardinality(model: *const TlModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.cardinality())
}

/// Saves a model checkpoint as JSON.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_model_save(model: *const TlModel, path: *const c_char) -> TlStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            set_error("null model");
            return TlStatus::TlErrNullPointer;
        };
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match save_model(&model.model, &model.config, path) {
            Ok(()) => TlStatus::TlOk,
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrIo
            }
        }
    })
}

/// Loads a model checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer
/// and the result freed with [`tl_model_free`].
#[no_mangle]
pub unsafe extern "C" fn tl_model_load(path: *const c_char, out: *mut *mut TlModel) -> TlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_model(path) {
            Ok(checkpoint) => {
                *out = Box::into_raw(Box::new(TlModel {
                    model: checkpoint.model,
                    config: checkpoint.train_config,
                }));
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrParse
            }
        }
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tl_model_free(model: *mut TlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Exact minimum distance from a binary-output target to the local set via
/// the brute-force classical search. Pass `starts = 0` for the default
/// multistart count.
///
/// # Safety
/// `target` must be a live handle; `out_distance` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_oracle_distance(
    target: *const TlDistribution,
    hidden_cardinality: usize,
    starts: usize,
    seed: u64,
    out_distance: *mut f64,
) -> TlStatus {
    guard(|| {
        let Some(target) = target.as_ref() else {
            set_error("null target");
            return TlStatus::TlErrNullPointer;
        };
        if out_distance.is_null() {
            set_error("null output pointer");
            return TlStatus::TlErrNullPointer;
        }
        let defaults = OracleOptions::default();
        let opts = OracleOptions {
            hidden_cardinality,
            starts: if starts == 0 { defaults.starts } else { starts },
            seed,
            ..defaults
        };
        match brute_force_local_distance(&target.inner, &opts) {
            Ok(outcome) => {
                *out_distance = outcome.distance;
                TlStatus::TlOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TlStatus::TlErrUnsupported
            }
        }
    })
}
