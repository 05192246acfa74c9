//! C ABI over the core library. Handles are opaque pointers owned by the
//! caller and released through the matching `_free` function; every entry
//! point returns a status code and stashes a per-thread message retrievable
//! via `mgp_last_error_message`.
//!
//! The generated header lands in `include/manifold_gp.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use manifold_gp::dataset::{Dataset, LabelSpec};
use manifold_gp::gp::{default_t_max, parse_individual, serialize_individual, Individual};
use manifold_gp::moead::{run, ArchiveEntry, MoeadConfig};
use manifold_gp::neighbors::NeighborModel;
use manifold_gp::variation::VariationConfig;
use manifold_gp::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MgpStatus {
    MgpOk = 0,
    MgpNullArgument = 1,
    MgpInvalidUtf8 = 2,
    MgpIoError = 3,
    MgpInvalidArgument = 4,
    MgpRuntimeError = 5,
    MgpPanic = 6,
}

/// A loaded dataset, already scaled to the unit hypercube.
pub struct MgpDataset {
    inner: Dataset,
}

/// A completed evolutionary run: the archived front plus run metadata.
pub struct MgpRun {
    front: Vec<ArchiveEntry>,
    offspring_evaluations: usize,
}

/// One multi-tree mapping from input features to embedding dimensions.
pub struct MgpIndividual {
    inner: Individual,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn fail(status: MgpStatus, message: &str) -> MgpStatus {
    set_last_error(message);
    status
}

fn fail_with(e: Error) -> MgpStatus {
    let status = match e {
        Error::Io { .. } | Error::Csv { .. } | Error::NeighborCache { .. } => MgpStatus::MgpIoError,
        Error::InvalidConfig(_)
        | Error::MissingLabelColumn { .. }
        | Error::ComponentsOutOfRange { .. }
        | Error::TooFewInstances { .. }
        | Error::TooFewFeatures { .. } => MgpStatus::MgpInvalidArgument,
        _ => MgpStatus::MgpRuntimeError,
    };
    fail(status, &e.to_string())
}

/// Panics must not unwind into C; they become `MgpPanic`.
fn guard(f: impl FnOnce() -> MgpStatus) -> MgpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(MgpStatus::MgpPanic, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, MgpStatus> {
    if ptr.is_null() {
        return Err(fail(MgpStatus::MgpNullArgument, "string argument is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(MgpStatus::MgpInvalidUtf8, "string argument is not UTF-8"))
}

/// Message describing the most recent failure on this thread, or null if the
/// last call succeeded. The pointer stays valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn mgp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.as_ptr(),
        None => std::ptr::null(),
    })
}

/// Load a CSV dataset and scale every feature to [0, 1]. `label` selects the
/// class column: "last", "none", or a column name from the header.
///
/// # Safety
/// `path` and `label` must be valid NUL-terminated strings; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mgp_dataset_load(
    path: *const c_char,
    label: *const c_char,
    out: *mut *mut MgpDataset,
) -> MgpStatus {
    guard(|| {
        if out.is_null() {
            return fail(MgpStatus::MgpNullArgument, "out pointer is null");
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let label = match utf8_arg(label) {
            Ok(l) => l,
            Err(status) => return status,
        };
        let spec = match label {
            "last" => LabelSpec::LastColumn,
            "none" => LabelSpec::None,
            name => LabelSpec::Named(name.to_string()),
        };
        let scaled = match Dataset::load(Path::new(path), &spec).and_then(|d| d.scale()) {
            Ok(d) => d,
            Err(e) => return fail_with(e),
        };
        *out = Box::into_raw(Box::new(MgpDataset { inner: scaled }));
        set_last_error("");
        MgpStatus::MgpOk
    })
}

/// Number of rows, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn mgp_dataset_num_instances(dataset: *const MgpDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { (*dataset).inner.num_instances() }
}

/// Number of feature columns, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn mgp_dataset_num_features(dataset: *const MgpDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { (*dataset).inner.num_features() }
}

/// # Safety
/// `dataset` must come from `mgp_dataset_load` and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn mgp_dataset_free(dataset: *mut MgpDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Run the multi-objective search. `t_max` of 0 picks the default cap of
/// max(2, ceil(m/2)); the other parameters mirror the command-line flags.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mgp_evolve(
    dataset: *const MgpDataset,
    seed: u64,
    generations: usize,
    population: usize,
    neighbors_k: usize,
    t_max: usize,
    out: *mut *mut MgpRun,
) -> MgpStatus {
    guard(|| {
        if dataset.is_null() || out.is_null() {
            return fail(MgpStatus::MgpNullArgument, "dataset or out pointer is null");
        }
        let d = &(*dataset).inner;
        if neighbors_k == 0 {
            return fail(MgpStatus::MgpInvalidArgument, "neighbors_k must be positive");
        }
        let m = d.num_features();
        let t_max = if t_max == 0 { default_t_max(m) } else { t_max };
        if t_max < 2 {
            return fail(MgpStatus::MgpInvalidArgument, "t_max must be at least 2");
        }

        let nm = match NeighborModel::build(d, neighbors_k) {
            Ok(nm) => nm,
            Err(e) => return fail_with(e),
        };
        let mut config = MoeadConfig::new(seed, VariationConfig::new(t_max, m));
        config.generations = generations;
        config.population = population;
        config.snapshot_every = 0;
        let result = match run(d, &nm, &config) {
            Ok(r) => r,
            Err(e) => return fail_with(e),
        };
        let front = result.archive.export().into_iter().cloned().collect();
        *out = Box::into_raw(Box::new(MgpRun {
            front,
            offspring_evaluations: result.offspring_evaluations,
        }));
        set_last_error("");
        MgpStatus::MgpOk
    })
}

/// Number of points on the archived front, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn mgp_run_front_size(run: *const MgpRun) -> usize {
    if run.is_null() {
        return 0;
    }
    unsafe { (*run).front.len() }
}

/// Total offspring evaluations performed (population x generations).
#[no_mangle]
pub extern "C" fn mgp_run_offspring_evaluations(run: *const MgpRun) -> usize {
    if run.is_null() {
        return 0;
    }
    unsafe { (*run).offspring_evaluations }
}

/// Fetch the tree count and cost of front point `index` (sorted by
/// ascending tree count).
///
/// # Safety
/// `run` must be a live handle; `out_trees` and `out_cost` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn mgp_run_front_entry(
    run: *const MgpRun,
    index: usize,
    out_trees: *mut usize,
    out_cost: *mut f64,
) -> MgpStatus {
    guard(|| {
        if run.is_null() || out_trees.is_null() || out_cost.is_null() {
            return fail(MgpStatus::MgpNullArgument, "run or out pointer is null");
        }
        let front = &(*run).front;
        let Some(entry) = front.get(index) else {
            return fail(
                MgpStatus::MgpInvalidArgument,
                &format!("front index {index} out of range ({} points)", front.len()),
            );
        };
        *out_trees = entry.objectives.raw_t;
        *out_cost = entry.objectives.f_cost;
        set_last_error("");
        MgpStatus::MgpOk
    })
}

/// Clone front point `index` into a standalone individual handle.
///
/// # Safety
/// `run` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mgp_run_individual(
    run: *const MgpRun,
    index: usize,
    out: *mut *mut MgpIndividual,
) -> MgpStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return fail(MgpStatus::MgpNullArgument, "run or out pointer is null");
        }
        let handle = &*run;
        let Some(entry) = handle.front.get(index) else {
            return fail(
                MgpStatus::MgpInvalidArgument,
                &format!("front index {index} out of range ({} points)", handle.front.len()),
            );
        };
        *out = Box::into_raw(Box::new(MgpIndividual { inner: entry.individual.clone() }));
        set_last_error("");
        MgpStatus::MgpOk
    })
}

/// # Safety
/// `run` must come from `mgp_evolve` and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn mgp_run_free(run: *mut MgpRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Parse a serialized individual (one prefix-notation tree per line) that
/// reads at most `num_features` input features.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn mgp_individual_parse(
    text: *const c_char,
    num_features: usize,
    out: *mut *mut MgpIndividual,
) -> MgpStatus {
    guard(|| {
        if out.is_null() {
            return fail(MgpStatus::MgpNullArgument, "out pointer is null");
        }
        let text = match utf8_arg(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_individual(text, num_features) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MgpIndividual { inner }));
                set_last_error("");
                MgpStatus::MgpOk
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Number of trees (embedding dimensions), or 0 for a null handle.
#[no_mangle]
pub extern "C" fn mgp_individual_num_trees(individual: *const MgpIndividual) -> usize {
    if individual.is_null() {
        return 0;
    }
    unsafe { (*individual).inner.num_trees() }
}

/// Serialize the individual to its text form. The returned string is owned
/// by the caller and must be released with `mgp_string_free`. Returns null
/// for a null handle.
///
/// # Safety
/// `individual` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mgp_individual_serialize(individual: *const MgpIndividual) -> *mut c_char {
    if individual.is_null() {
        return std::ptr::null_mut();
    }
    let text = serialize_individual(&(*individual).inner);
    match CString::new(text) {
        Ok(c) => c.into_raw(),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Map a dataset through the individual. On success `*out_values` holds a
/// freshly allocated row-major matrix of `num_instances x num_trees` values;
/// release it with `mgp_buffer_free(*out_values, *out_len)`.
///
/// # Safety
/// `individual` and `dataset` must be live handles; the out pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn mgp_individual_apply(
    individual: *const MgpIndividual,
    dataset: *const MgpDataset,
    out_values: *mut *mut f64,
    out_len: *mut usize,
) -> MgpStatus {
    guard(|| {
        if individual.is_null() || dataset.is_null() || out_values.is_null() || out_len.is_null() {
            return fail(MgpStatus::MgpNullArgument, "handle or out pointer is null");
        }
        let embedding = match (*individual).inner.apply(&(*dataset).inner) {
            Ok(e) => e,
            Err(e) => return fail_with(e),
        };
        // Array2 in standard layout iterates row-major, matching the header's
        // documented ordering
        let buffer: Box<[f64]> = embedding.iter().copied().collect();
        *out_len = buffer.len();
        *out_values = Box::into_raw(buffer) as *mut f64;
        set_last_error("");
        MgpStatus::MgpOk
    })
}

/// # Safety
/// `individual` must come from `mgp_run_individual` or
/// `mgp_individual_parse` and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn mgp_individual_free(individual: *mut MgpIndividual) {
    if !individual.is_null() {
        drop(Box::from_raw(individual));
    }
}

/// # Safety
/// `buffer` must come from `mgp_individual_apply` with the matching `len`.
#[no_mangle]
pub unsafe extern "C" fn mgp_buffer_free(buffer: *mut f64, len: usize) {
    if !buffer.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(buffer, len)));
    }
}

/// # Safety
/// `s` must come from `mgp_individual_serialize` and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn mgp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn wine_path() -> CString {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wine.csv");
        CString::new(path.to_str().unwrap()).unwrap()
    }

    fn load_wine() -> *mut MgpDataset {
        let label = CString::new("last").unwrap();
        let mut dataset: *mut MgpDataset = std::ptr::null_mut();
        let status = unsafe { mgp_dataset_load(wine_path().as_ptr(), label.as_ptr(), &mut dataset) };
        assert_eq!(status, MgpStatus::MgpOk);
        dataset
    }

    #[test]
    fn dataset_load_reports_shape() {
        let dataset = load_wine();
        assert_eq!(mgp_dataset_num_instances(dataset), 178);
        assert_eq!(mgp_dataset_num_features(dataset), 13);
        unsafe { mgp_dataset_free(dataset) };
    }

    #[test]
    fn missing_file_sets_io_error_and_message() {
        let path = CString::new("/no/such/file.csv").unwrap();
        let label = CString::new("last").unwrap();
        let mut dataset: *mut MgpDataset = std::ptr::null_mut();
        let status = unsafe { mgp_dataset_load(path.as_ptr(), label.as_ptr(), &mut dataset) };
        assert_eq!(status, MgpStatus::MgpIoError);
        assert!(dataset.is_null());
        let message = mgp_last_error_message();
        assert!(!message.is_null());
        let text = unsafe { CStr::from_ptr(message) }.to_str().unwrap();
        assert!(text.contains("file.csv"), "message was {text:?}");
    }

    #[test]
    fn null_arguments_are_rejected_not_dereferenced() {
        let mut dataset: *mut MgpDataset = std::ptr::null_mut();
        let label = CString::new("last").unwrap();
        let status = unsafe { mgp_dataset_load(std::ptr::null(), label.as_ptr(), &mut dataset) };
        assert_eq!(status, MgpStatus::MgpNullArgument);

        let mut run: *mut MgpRun = std::ptr::null_mut();
        let status = unsafe { mgp_evolve(std::ptr::null(), 0, 1, 8, 2, 0, &mut run) };
        assert_eq!(status, MgpStatus::MgpNullArgument);

        assert_eq!(mgp_run_front_size(std::ptr::null()), 0);
        assert_eq!(mgp_individual_num_trees(std::ptr::null()), 0);
        unsafe {
            assert!(mgp_individual_serialize(std::ptr::null()).is_null());
            mgp_dataset_free(std::ptr::null_mut());
            mgp_run_free(std::ptr::null_mut());
            mgp_individual_free(std::ptr::null_mut());
            mgp_string_free(std::ptr::null_mut());
            mgp_buffer_free(std::ptr::null_mut(), 0);
        }
    }

    #[test]
    fn evolve_front_entries_and_apply_round_trip() {
        let dataset = load_wine();
        let mut run: *mut MgpRun = std::ptr::null_mut();
        let status = unsafe { mgp_evolve(dataset, 13, 6, 16, 2, 0, &mut run) };
        assert_eq!(status, MgpStatus::MgpOk);
        assert_eq!(mgp_run_offspring_evaluations(run), 16 * 6);

        let size = mgp_run_front_size(run);
        assert!(size >= 1);
        let mut previous_t = 0usize;
        let mut previous_cost = f64::INFINITY;
        for index in 0..size {
            let (mut t, mut cost) = (0usize, 0f64);
            let status = unsafe { mgp_run_front_entry(run, index, &mut t, &mut cost) };
            assert_eq!(status, MgpStatus::MgpOk);
            assert!(t > previous_t && cost < previous_cost);
            previous_t = t;
            previous_cost = cost;
        }
        let (mut t, mut cost) = (0usize, 0f64);
        let status = unsafe { mgp_run_front_entry(run, size, &mut t, &mut cost) };
        assert_eq!(status, MgpStatus::MgpInvalidArgument);

        let mut individual: *mut MgpIndividual = std::ptr::null_mut();
        let status = unsafe { mgp_run_individual(run, 0, &mut individual) };
        assert_eq!(status, MgpStatus::MgpOk);
        let trees = mgp_individual_num_trees(individual);
        assert!(trees >= 1);

        // serialize -> parse -> serialize is the identity
        let text = unsafe { mgp_individual_serialize(individual) };
        assert!(!text.is_null());
        let mut reparsed: *mut MgpIndividual = std::ptr::null_mut();
        let status = unsafe { mgp_individual_parse(text, 13, &mut reparsed) };
        assert_eq!(status, MgpStatus::MgpOk);
        let text_again = unsafe { mgp_individual_serialize(reparsed) };
        unsafe {
            assert_eq!(CStr::from_ptr(text), CStr::from_ptr(text_again));
        }

        let mut values: *mut f64 = std::ptr::null_mut();
        let mut len = 0usize;
        let status = unsafe { mgp_individual_apply(individual, dataset, &mut values, &mut len) };
        assert_eq!(status, MgpStatus::MgpOk);
        assert_eq!(len, 178 * trees);
        let slice = unsafe { std::slice::from_raw_parts(values, len) };
        assert!(slice.iter().all(|v| v.is_finite()));

        unsafe {
            mgp_buffer_free(values, len);
            mgp_string_free(text);
            mgp_string_free(text_again);
            mgp_individual_free(reparsed);
            mgp_individual_free(individual);
            mgp_run_free(run);
            mgp_dataset_free(dataset);
        }
    }

    #[test]
    fn parse_rejects_out_of_range_features() {
        let text = CString::new("(add5 f0 f1 f2 f3 f99)").unwrap();
        let mut individual: *mut MgpIndividual = std::ptr::null_mut();
        let status = unsafe { mgp_individual_parse(text.as_ptr(), 13, &mut individual) };
        assert_eq!(status, MgpStatus::MgpRuntimeError);
        assert!(individual.is_null());
        let message = unsafe { CStr::from_ptr(mgp_last_error_message()) };
        assert!(message.to_str().unwrap().contains("99"));
    }

    #[test]
    fn invalid_utf8_is_reported() {
        let bytes = [0xffu8, 0xfe, 0x00];
        let mut individual: *mut MgpIndividual = std::ptr::null_mut();
        let status = unsafe {
            mgp_individual_parse(bytes.as_ptr() as *const c_char, 13, &mut individual)
        };
        assert_eq!(status, MgpStatus::MgpInvalidUtf8);
    }
}
