use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use multiaff::classify::{classify_publication, domestic_flags, MultiKind};
use multiaff::ingest::{
    filter_collaborative, parse_corpus_with, write_qc_csv, Corpus, IngestOptions,
    DEFAULT_CITATION_WINDOW,
};
use multiaff::nbrm::{run_table, CellOutcome, DesignOptions, FitOptions, FitThresholds};
use multiaff::reference::{sample_countries, Country, Discipline};
use multiaff::report::{self, FitReport, TopK};
use multiaff::shares::{self, ShareError};
use multiaff::synth::{gen_corpus, write_records, SynthSpec};

#[derive(Parser)]
#[command(
    name = "multiaff",
    version,
    about = "Multi-affiliated authorship statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a record file and report rejected lines.
    Validate(CommonArgs),
    /// Per-publication classification flags.
    Classify(ClassifyArgs),
    /// Share tables, normalized matrices, rankings.
    Shares(SharesArgs),
    /// Negative binomial citation regressions.
    Regress(RegressArgs),
    /// Generate a synthetic record file.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Comma-separated ISO 3166-1 alpha-2 codes.
    #[arg(long, value_delimiter = ',')]
    countries: Option<Vec<String>>,
    /// Comma-separated discipline codes.
    #[arg(long, value_delimiter = ',')]
    disciplines: Option<Vec<String>>,
    /// JSON file with the same field names as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    citation_window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Add domestic flags for this country.
    #[arg(long)]
    country: Option<String>,
}

#[derive(Args)]
struct SharesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Institutions listed per country and kind.
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Country mode: restrict rows and use domestic marks. Comma-separated.
    #[arg(long, value_delimiter = ',')]
    country: Option<Vec<String>>,
    #[arg(long)]
    max_authors: Option<usize>,
    #[arg(long)]
    min_rows: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON spec; individual flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Record file to write; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_pubs: Option<usize>,
    /// Discipline mix, e.g. `CHE=0.6,PHY=0.4`.
    #[arg(long)]
    disciplines: Option<String>,
    /// Lead-country mix, e.g. `FR=0.5,US=0.5`.
    #[arg(long)]
    countries: Option<String>,
    #[arg(long)]
    p_nm: Option<f64>,
    #[arg(long)]
    p_im: Option<f64>,
    /// Per-country NM probabilities, e.g. `FR=0.6`.
    #[arg(long)]
    country_p_nm: Option<String>,
    #[arg(long)]
    country_p_im: Option<String>,
    #[arg(long)]
    p_collab: Option<f64>,
    #[arg(long)]
    p_foreign_coauthor: Option<f64>,
    #[arg(long)]
    authors_min: Option<usize>,
    #[arg(long)]
    authors_max: Option<usize>,
    #[arg(long)]
    refs_mean: Option<f64>,
    #[arg(long)]
    institutions_per_country: Option<usize>,
    #[arg(long)]
    hospital_share: Option<f64>,
    /// Seven comma-separated coefficients in design-column order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    first_year: Option<i32>,
}

/// Configuration file contents.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    outdir: Option<PathBuf>,
    countries: Option<Vec<String>>,
    disciplines: Option<Vec<String>>,
    citation_window: Option<usize>,
    seed: Option<u64>,
    country: Option<Vec<String>>,
    max_authors: Option<usize>,
    min_rows: Option<usize>,
    top_k: Option<usize>,
}

/// Resolved settings after merging defaults, config file and flags.
struct RunConfig {
    input: PathBuf,
    outdir: Option<PathBuf>,
    countries: Vec<Country>,
    disciplines: Vec<Discipline>,
    citation_window: usize,
    file: FileConfig,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Validation(String),
    NothingComputable(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::NothingComputable(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Validation(m) => m,
            Failure::NothingComputable(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn io_err(context: &str, path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{context} {}: {e}", path.display()))
}

fn parse_list<T: FromStr>(values: &[String]) -> Result<Vec<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    values
        .iter()
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| T::from_str(v).map_err(|e| Failure::Usage(e.to_string())))
        .collect()
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| io_err("cannot read config", path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
}

fn resolve(common: &CommonArgs) -> Result<RunConfig, Failure> {
    let file = load_config(common.config.as_deref())?;
    let input = common
        .input
        .clone()
        .or_else(|| file.input.clone())
        .ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let countries = match common.countries.as_ref().or(file.countries.as_ref()) {
        Some(list) => parse_list(list)?,
        None => sample_countries(),
    };
    let disciplines = match common.disciplines.as_ref().or(file.disciplines.as_ref()) {
        Some(list) => parse_list(list)?,
        None => Discipline::ALL.to_vec(),
    };
    let citation_window = common
        .citation_window
        .or(file.citation_window)
        .unwrap_or(DEFAULT_CITATION_WINDOW);
    if citation_window == 0 {
        return Err(Failure::Usage("--citation-window must be positive".into()));
    }
    Ok(RunConfig {
        input,
        outdir: common.outdir.clone().or_else(|| file.outdir.clone()),
        countries,
        disciplines,
        citation_window,
        file,
    })
}

fn read_corpus(config: &RunConfig) -> Result<Corpus, Failure> {
    let file = File::open(&config.input).map_err(|e| io_err("cannot open", &config.input, e))?;
    let options = IngestOptions {
        citation_window: config.citation_window,
    };
    parse_corpus_with(BufReader::new(file), options)
        .map_err(|e| io_err("cannot read", &config.input, e))
}

/// Parses, reports QC rejections as warnings and keeps collaborative records.
fn collaborative_corpus(config: &RunConfig) -> Result<Corpus, Failure> {
    let corpus = read_corpus(config)?;
    if !corpus.qc.is_empty() {
        log::warn!(
            "{} record(s) rejected; run `validate` for details",
            corpus.qc.len()
        );
    }
    let collaborative = filter_collaborative(&corpus);
    if collaborative.publications.is_empty() {
        return Err(Failure::NothingComputable(
            "no collaborative publications in input".into(),
        ));
    }
    Ok(collaborative)
}

fn outdir(config: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = config.outdir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_err("cannot create", &dir, e))?;
    Ok(dir)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic<F>(path: &Path, fill: F) -> CmdResult
where
    F: FnOnce(&mut dyn Write) -> Result<(), String>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| io_err("cannot create temporary file for", path, e))?;
    {
        let mut buffered = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buffered).map_err(|e| io_err("cannot write", path, e))?;
        buffered
            .flush()
            .map_err(|e| io_err("cannot write", path, e))?;
    }
    tmp.persist(path)
        .map_err(|e| io_err("cannot rename into", path, e.error))?;
    Ok(())
}

fn write_csv_file<F>(path: &Path, fill: F) -> CmdResult
where
    F: FnOnce(&mut dyn Write) -> Result<(), csv::Error>,
{
    write_atomic(path, |w| fill(w).map_err(|e| e.to_string()))
}

fn cmd_validate(common: &CommonArgs) -> CmdResult {
    let config = resolve(common)?;
    let corpus = read_corpus(&config)?;
    let emit = |w: &mut dyn Write| write_qc_csv(&corpus.qc, w);
    match &config.outdir {
        Some(_) => write_csv_file(&outdir(&config)?.join("qc.csv"), emit)?,
        None => emit(&mut io::stdout().lock())
            .map_err(|e| Failure::Io(format!("cannot write QC report: {e}")))?,
    }
    if corpus.publications.is_empty() && corpus.qc.is_empty() {
        return Err(Failure::Validation("empty corpus".into()));
    }
    if !corpus.qc.is_empty() {
        return Err(Failure::Validation(format!(
            "{} record(s) rejected, {} valid",
            corpus.qc.len(),
            corpus.publications.len()
        )));
    }
    log::info!("{} valid record(s)", corpus.publications.len());
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs) -> CmdResult {
    let config = resolve(&args.common)?;
    let country: Option<Country> = args
        .country
        .as_deref()
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|e: multiaff::reference::UnknownCountry| Failure::Usage(e.to_string()))
        })
        .transpose()?;
    let corpus = collaborative_corpus(&config)?;

    let emit = |w: &mut dyn Write| -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["pub_id", "discipline", "has_nm", "has_im"];
        if country.is_some() {
            header.extend(["country", "p_nm_domestic", "p_im_domestic"]);
        }
        out.write_record(&header)?;
        for p in &corpus.publications {
            let class = classify_publication(p);
            let mut record = vec![
                p.id.clone(),
                p.discipline.code().to_string(),
                class.has_nm.to_string(),
                class.has_im.to_string(),
            ];
            if let Some(c) = country {
                let flags = domestic_flags(p, c);
                record.extend([
                    c.to_string(),
                    flags.p_nm_domestic.to_string(),
                    flags.p_im_domestic.to_string(),
                ]);
            }
            out.write_record(record)?;
        }
        out.flush()?;
        Ok(())
    };
    match &config.outdir {
        Some(_) => write_csv_file(&outdir(&config)?.join("classify.csv"), emit),
        None => emit(&mut io::stdout().lock())
            .map_err(|e| Failure::Io(format!("cannot write output: {e}"))),
    }
}

fn cmd_shares(args: &SharesArgs) -> CmdResult {
    let config = resolve(&args.common)?;
    let top_k = args.top_k.or(config.file.top_k).unwrap_or(3);
    if top_k == 0 {
        return Err(Failure::Usage("--top-k must be at least 1".into()));
    }
    let corpus = collaborative_corpus(&config)?;
    let pubs = &corpus.publications;
    let dir = outdir(&config)?;

    let present: std::collections::BTreeSet<Country> =
        pubs.iter().flat_map(|p| p.countries()).collect();
    let countries: Vec<Country> = config
        .countries
        .iter()
        .copied()
        .filter(|c| {
            let keep = present.contains(c);
            if !keep {
                log::warn!("country {c} does not occur in the corpus; dropped");
            }
            keep
        })
        .collect();

    let summary = shares::corpus_summary(pubs).map_err(share_failure)?;
    write_csv_file(&dir.join("table3.csv"), |w| {
        report::write_table3(&summary, w)
    })?;

    let by_discipline = shares::discipline_shares(pubs, &config.disciplines);
    write_csv_file(&dir.join("tableA1.csv"), |w| {
        report::write_table_a1(&by_discipline, w)
    })?;

    for (kind, table, fig) in [
        (MultiKind::NM, "tableA4.csv", "fig5_nm.csv"),
        (MultiKind::IM, "tableA5.csv", "fig5_im.csv"),
    ] {
        let matrix = shares::country_discipline_shares(pubs, &countries, &config.disciplines, kind)
            .map_err(share_failure)?;
        write_csv_file(&dir.join(table), |w| report::write_share_matrix(&matrix, w))?;
        let ratios = shares::normalize(&matrix);
        for d in &ratios.undefined_cols {
            log::warn!("{kind} baseline for {d} is zero or missing; ratios undefined");
        }
        write_csv_file(&dir.join(fig), |w| report::write_ratio_matrix(&ratios, w))?;
    }

    let mut rankings = Vec::new();
    for &c in &countries {
        for kind in [MultiKind::NM, MultiKind::IM] {
            let ranks = shares::top_institutions(pubs, c, kind, top_k).map_err(share_failure)?;
            rankings.push((c, kind, ranks));
        }
    }
    let groups: Vec<TopK<'_>> = rankings
        .iter()
        .map(|(country, kind, ranks)| TopK {
            country: *country,
            kind: *kind,
            ranks,
        })
        .collect();
    write_csv_file(&dir.join("topk.csv"), |w| report::write_topk(&groups, w))?;

    match shares::hosp_univ_combination_share(pubs, &config.disciplines) {
        Ok(rows) => write_csv_file(&dir.join("figA1.csv"), |w| report::write_fig_a1(&rows, w))?,
        Err(e) => log::warn!("figA1.csv not written: {e}"),
    }
    Ok(())
}

fn share_failure(e: ShareError) -> Failure {
    match e {
        ShareError::EmptyCorpus => Failure::NothingComputable(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

fn cmd_regress(args: &RegressArgs) -> CmdResult {
    let config = resolve(&args.common)?;
    let countries: Option<Vec<Country>> = args
        .country
        .as_ref()
        .or(config.file.country.as_ref())
        .map(|list| parse_list(list))
        .transpose()?;
    let design = DesignOptions {
        max_authors: args.max_authors.or(config.file.max_authors).unwrap_or(10),
        citation_window: config.citation_window,
    };
    let thresholds = FitThresholds {
        min_rows: args.min_rows.or(config.file.min_rows).unwrap_or(50),
        ..FitThresholds::default()
    };
    let corpus = collaborative_corpus(&config)?;
    let dir = outdir(&config)?;

    let table = run_table(
        &corpus.publications,
        &config.disciplines,
        countries.as_deref(),
        design,
        thresholds,
        &FitOptions::default(),
    );

    let fits_dir = dir.join("fits");
    fs::create_dir_all(&fits_dir).map_err(|e| io_err("cannot create", &fits_dir, e))?;
    for (discipline, cell) in table.cells() {
        let stem = report::fit_stem(discipline, cell.country);
        match &cell.outcome {
            CellOutcome::Fitted { fit, vif } => {
                let json = FitReport::new(discipline, cell.country, fit, vif.as_ref()).to_json();
                write_atomic(&fits_dir.join(format!("{stem}.json")), |w| {
                    w.write_all(json.as_bytes()).map_err(|e| e.to_string())
                })?;
            }
            CellOutcome::Skipped(why) => log::warn!("{stem}: skipped ({why})"),
            CellOutcome::Failed(why) => log::warn!("{stem}: fit failed ({why})"),
        }
    }

    if countries.is_some() {
        write_csv_file(&dir.join("table5.csv"), |w| report::write_table5(&table, w))?;
    } else {
        write_csv_file(&dir.join("table4.csv"), |w| report::write_table4(&table, w))?;
    }

    if table.fitted_count() == 0 {
        return Err(Failure::NothingComputable(
            "no regression cell could be fitted".into(),
        ));
    }
    Ok(())
}

fn parse_mix<K: FromStr + Ord>(text: &str) -> Result<BTreeMap<K, f64>, Failure>
where
    K::Err: std::fmt::Display,
{
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("expected KEY=VALUE, got '{pair}'")))?;
            let key = K::from_str(k.trim()).map_err(|e| Failure::Usage(e.to_string()))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|e| Failure::Usage(format!("bad probability '{v}': {e}")))?;
            Ok((key, value))
        })
        .collect()
}

fn synth_spec(args: &SynthArgs) -> Result<SynthSpec, Failure> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err("cannot read spec", path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("invalid spec {}: {e}", path.display())))?
        }
        None => SynthSpec::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { spec.$field = v; })*
        };
    }
    set!(
        seed,
        n_pubs,
        p_nm,
        p_im,
        p_collab,
        p_foreign_coauthor,
        authors_min,
        authors_max,
        refs_mean,
        institutions_per_country,
        hospital_share,
        alpha,
        first_year
    );
    if let Some(text) = &args.disciplines {
        spec.disciplines = parse_mix(text)?;
    }
    if let Some(text) = &args.countries {
        spec.countries = parse_mix(text)?;
    }
    if let Some(text) = &args.country_p_nm {
        spec.country_p_nm = parse_mix(text)?;
    }
    if let Some(text) = &args.country_p_im {
        spec.country_p_im = parse_mix(text)?;
    }
    if let Some(beta) = &args.beta {
        spec.beta = beta
            .as_slice()
            .try_into()
            .map_err(|_| Failure::Usage("--beta needs exactly 7 values".into()))?;
    }
    Ok(spec)
}

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let spec = synth_spec(args)?;
    let publications = gen_corpus(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    match &args.output {
        Some(path) => write_atomic(path, |w| {
            write_records(&publications, w).map_err(|e| e.to_string())
        }),
        None => write_records(&publications, io::stdout().lock())
            .map_err(|e| Failure::Io(format!("cannot write records: {e}"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Shares(args) => cmd_shares(args),
        Command::Regress(args) => cmd_regress(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match failure {
                Failure::NothingComputable(_) => log::warn!("{}", failure.message()),
                _ => log::error!("{}", failure.message()),
            }
            ExitCode::from(failure.code())
        }
    }
}
