//! C ABI over the pruning toolkit.
//!
//! Nets and datasets are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PbStatus`]; on failure the
//! message is available from [`pb_last_error`] on the same thread until the
//! next failing call. Panics are caught at the boundary and reported as
//! [`PbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use prunebench::dataio::{load_csv, synthesize_dataset, to_dataset, ClassScheme, FeatureScaling};
use prunebench::engine::{train, Dataset, Matrix, TrainConfig};
use prunebench::harness::evaluate;
use prunebench::pruning::{prune, Strategy, StrategyConfig};
use prunebench::{build_model, CountMode, Error, ModelConfig, Net, PrunableNet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Io = 4,
    Format = 5,
    UnknownStrategy = 6,
    EmptyDataset = 7,
    Panic = 8,
}

/// Class grouping of a dataset.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbScheme {
    Full10 = 0,
    Grouped5 = 1,
}

impl From<PbScheme> for ClassScheme {
    fn from(s: PbScheme) -> Self {
        match s {
            PbScheme::Full10 => ClassScheme::Full10,
            PbScheme::Grouped5 => ClassScheme::Grouped5,
        }
    }
}

/// Opaque network handle.
pub struct PbNet {
    inner: PrunableNet,
}

/// Opaque labelled dataset handle.
pub struct PbDataset {
    inner: Dataset<f32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PbStatus {
    match e {
        Error::Shape { .. } => PbStatus::Shape,
        Error::EmptyDataset => PbStatus::EmptyDataset,
        Error::UnknownStrategy(_) => PbStatus::UnknownStrategy,
        Error::Io { .. } => PbStatus::Io,
        Error::Record { .. } | Error::Checkpoint(_) | Error::Csv(_) => PbStatus::Format,
        Error::Cell { source, .. } => status_of(source),
        _ => PbStatus::InvalidArgument,
    }
}

struct Fail(PbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PbStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            PbStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PbStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a preset model (`"big"` or `"small"`).
///
/// # Safety
/// `preset` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pb_net_build(preset: *const c_char, seed: u64, out: *mut *mut PbNet) -> PbStatus {
    guard(|| {
        let cfg = match str_arg(preset, "preset")? {
            "big" => ModelConfig::big(),
            "small" => ModelConfig::small(),
            other => {
                return Err(Fail(
                    PbStatus::InvalidArgument,
                    format!("unknown preset `{other}`; expected big or small"),
                ))
            }
        };
        let net = build_model(&cfg, seed)?;
        *out_ptr(out, "out")? = boxed(PbNet { inner: net });
        Ok(())
    })
}

/// Builds a net with explicit layer dims `[input, filters..., classes]`.
///
/// # Safety
/// `dims` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pb_net_from_dims(
    dims: *const usize,
    len: usize,
    seed: u64,
    out: *mut *mut PbNet,
) -> PbStatus {
    guard(|| {
        if dims.is_null() {
            return Err(null("dims"));
        }
        let dims = std::slice::from_raw_parts(dims, len);
        let net = Net::from_dims(dims, seed)?;
        *out_ptr(out, "out")? = boxed(PbNet { inner: net });
        Ok(())
    })
}

/// Releases a net. Null is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pb_net_free(net: *mut PbNet) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Parameter count; `nonzero` skips masked filters and zero weights.
///
/// # Safety
/// `net` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pb_net_count_params(net: *const PbNet, nonzero: bool, out: *mut usize) -> PbStatus {
    guard(|| {
        let mode = if nonzero { CountMode::Nonzero } else { CountMode::All };
        *out_ptr(out, "out")? = handle(net, "net")?.inner.count_params(mode);
        Ok(())
    })
}

/// Number of layers, including the classifier.
///
/// # Safety
/// `net` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pb_net_num_layers(net: *const PbNet, out: *mut usize) -> PbStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(net, "net")?.inner.layers.len();
        Ok(())
    })
}

/// Active filters per layer written into `out[..num_layers]`.
///
/// # Safety
/// `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn pb_net_active_filters(net: *const PbNet, out: *mut usize, cap: usize) -> PbStatus {
    guard(|| {
        let active = handle(net, "net")?.inner.active_filters();
        if out.is_null() {
            return Err(null("out"));
        }
        if cap < active.len() {
            return Err(Fail(
                PbStatus::InvalidArgument,
                format!("buffer holds {cap} values, need {}", active.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, active.len()).copy_from_slice(&active);
        Ok(())
    })
}

/// # Safety
/// `net` must be valid and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pb_net_save(net: *const PbNet, path: *const c_char) -> PbStatus {
    guard(|| {
        let net = handle(net, "net")?;
        net.inner.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pb_net_load(path: *const c_char, out: *mut *mut PbNet) -> PbStatus {
    guard(|| {
        let net = PrunableNet::load(Path::new(str_arg(path, "path")?))?;
        *out_ptr(out, "out")? = boxed(PbNet { inner: net });
        Ok(())
    })
}

/// Logits for `rows` row-major inputs of width `cols`, written to
/// `out[..rows * classes]`.
///
/// # Safety
/// `x` must hold `rows * cols` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn pb_net_forward(
    net: *const PbNet,
    x: *const f32,
    rows: usize,
    cols: usize,
    out: *mut f32,
    out_len: usize,
) -> PbStatus {
    guard(|| {
        let net = handle(net, "net")?;
        if x.is_null() {
            return Err(null("x"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let input = Matrix::from_vec(rows, cols, std::slice::from_raw_parts(x, rows * cols).to_vec())?;
        let logits = net.inner.forward(&input)?;
        if out_len < logits.data().len() {
            return Err(Fail(
                PbStatus::InvalidArgument,
                format!("buffer holds {out_len} values, need {}", logits.data().len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, logits.data().len()).copy_from_slice(logits.data());
        Ok(())
    })
}

/// Synthetic packet dataset with `per_class` rows per class.
///
/// # Safety
/// `out` must be valid and `scheme` one of the declared values.
#[no_mangle]
pub unsafe extern "C" fn pb_dataset_synth(
    per_class: usize,
    scheme: PbScheme,
    seed: u64,
    out: *mut *mut PbDataset,
) -> PbStatus {
    guard(|| {
        let scheme = ClassScheme::from(scheme);
        let recs = synthesize_dataset(per_class, scheme, seed);
        let data = to_dataset(&recs, scheme, FeatureScaling::Raw)?;
        *out_ptr(out, "out")? = boxed(PbDataset { inner: data });
        Ok(())
    })
}

/// Loads a packet CSV and featurizes it.
///
/// # Safety
/// `path` must be NUL-terminated, `out` valid and `scheme` one of the
/// declared values.
#[no_mangle]
pub unsafe extern "C" fn pb_dataset_load_csv(
    path: *const c_char,
    scheme: PbScheme,
    out: *mut *mut PbDataset,
) -> PbStatus {
    guard(|| {
        let scheme = ClassScheme::from(scheme);
        let recs = load_csv(Path::new(str_arg(path, "path")?), false)?;
        let data = to_dataset(&recs, scheme, FeatureScaling::Raw)?;
        *out_ptr(out, "out")? = boxed(PbDataset { inner: data });
        Ok(())
    })
}

/// Dataset from row-major features and labels.
///
/// # Safety
/// `features` must hold `rows * cols` values and `labels` `rows` values.
#[no_mangle]
pub unsafe extern "C" fn pb_dataset_from_arrays(
    features: *const f32,
    labels: *const usize,
    rows: usize,
    cols: usize,
    classes: usize,
    out: *mut *mut PbDataset,
) -> PbStatus {
    guard(|| {
        if features.is_null() {
            return Err(null("features"));
        }
        if labels.is_null() {
            return Err(null("labels"));
        }
        let x = Matrix::from_vec(rows, cols, std::slice::from_raw_parts(features, rows * cols).to_vec())?;
        let y = std::slice::from_raw_parts(labels, rows).to_vec();
        let data = Dataset::new(x, y, classes)?;
        *out_ptr(out, "out")? = boxed(PbDataset { inner: data });
        Ok(())
    })
}

/// # Safety
/// `data`, `rows` and `cols` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pb_dataset_shape(data: *const PbDataset, rows: *mut usize, cols: *mut usize) -> PbStatus {
    guard(|| {
        let d = &handle(data, "data")?.inner;
        *out_ptr(rows, "rows")? = d.len();
        *out_ptr(cols, "cols")? = d.width();
        Ok(())
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `data` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pb_dataset_free(data: *mut PbDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Trains `net` in place for `epochs` epochs. A zero `learning_rate` or
/// `batch_size` keeps the default schedule's value.
///
/// # Safety
/// `net` and `data` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pb_train(
    net: *mut PbNet,
    data: *const PbDataset,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
) -> PbStatus {
    guard(|| {
        let data = &handle(data, "data")?.inner;
        let net = out_ptr(net, "net")?;
        let mut cfg = TrainConfig::default().with_epochs(epochs).with_seed(seed);
        if learning_rate != 0.0 {
            cfg.learning_rate = learning_rate;
        }
        if batch_size != 0 {
            cfg.batch_size = batch_size;
        }
        train(&mut net.inner, data, &cfg)?;
        Ok(())
    })
}

/// Runs one strategy (by snake_case name) and returns a new pruned net.
///
/// # Safety
/// `net`, `data` and `out` must be valid and `strategy` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pb_prune(
    net: *const PbNet,
    data: *const PbDataset,
    strategy: *const c_char,
    percent: f64,
    prune_epochs: usize,
    seed: u64,
    out: *mut *mut PbNet,
) -> PbStatus {
    guard(|| {
        let strategy: Strategy = str_arg(strategy, "strategy")?.parse()?;
        let mut cfg = StrategyConfig::new(strategy, percent);
        cfg.prune_epochs = prune_epochs;
        cfg.seed = seed;
        let pruned = prune(&handle(net, "net")?.inner, &handle(data, "data")?.inner, &cfg)?;
        *out_ptr(out, "out")? = boxed(PbNet { inner: pruned.net });
        Ok(())
    })
}

/// Macro-averaged F1 of `net` on `data`.
///
/// # Safety
/// `net`, `data` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pb_macro_f1(net: *const PbNet, data: *const PbDataset, out: *mut f64) -> PbStatus {
    guard(|| {
        *out_ptr(out, "out")? = evaluate(&handle(net, "net")?.inner, &handle(data, "data")?.inner)?;
        Ok(())
    })
}
