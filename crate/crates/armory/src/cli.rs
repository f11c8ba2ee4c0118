//! The `armory` command line.
//!
//! Exit codes: 0 success or ALLOW, 1 DENY or failed verification, 2 usage or
//! input error, 3 operational failure. Data goes to standard output, diagnostics
//! to standard error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use armory_core::dds::{compile_permissions, fold_rules, CompileOptions, DdsAction, MappingMode, PermissionsDocument};
use armory_core::eval::describe;
use armory_core::pdp::{pdp_evaluate, TransportRequest};
use armory_core::policy::PolicyTree;
use armory_core::verify::{
    compile_scenario, extract_min_policy, report_to_dot, verify_scenario, EdgeClass, LabelSource, TransportModel,
    TransportSetup, VerificationReport,
};
use armory_core::{evaluate_request, AccessRequest, ObjectKind, Verb};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clock::{format_rfc3339, parse_rfc3339, Clock};
use crate::keystore::{parse_domains, Keystore, KeystoreConfig, KeystoreError, PackageOptions, SignerKind};
use crate::permissions_xml::{parse_permissions, write_permissions};
use crate::policy_xml::{load_policy, write_policy};
use crate::scenario::{parse_scenario, report_json, to_json_text};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DENIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mapping {
    Ardent,
    Bouncy,
}

impl From<Mapping> for MappingMode {
    fn from(m: Mapping) -> Self {
        match m {
            Mapping::Ardent => MappingMode::Ardent,
            Mapping::Bouncy => MappingMode::Bouncy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Ideal,
    #[value(name = "ardent_startup")]
    ArdentStartup,
}

impl From<Model> for TransportModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Ideal => TransportModel::Ideal,
            Model::ArdentStartup => TransportModel::ArdentStartup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Signer {
    Mock,
    External,
}

#[derive(Debug, Parser)]
#[command(name = "armory", version, about = "MAC policies for publish/subscribe robots: check, compile, provision, verify")]
struct Cli {
    /// Keystore root directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "keystore")]
    keystore: PathBuf,
    /// Pin "now" to an RFC 3339 instant.
    #[arg(long, global = true, value_name = "RFC3339", value_parser = parse_clock)]
    clock: Option<Clock>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

fn parse_clock(s: &str) -> Result<Clock, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate policies.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Manage a keystore workspace.
    #[command(subcommand)]
    Keystore(KeystoreCommand),
    /// Compile a policy into a permissions document for one subject.
    Compile(CompileArgs),
    /// Run the transport access decision over a permissions document.
    #[command(subcommand)]
    Pdp(PdpCommand),
    /// Extract the minimal policy granting exactly a scenario's edges.
    Extract(ExtractArgs),
    /// Label a scenario's complete graph and compare against its edges.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
enum PolicyCommand {
    /// Decide one request: exit 0 on ALLOW, 1 on DENY.
    Check {
        policy: PathBuf,
        subject: String,
        verb: String,
        kind: String,
        object: String,
    },
}

#[derive(Debug, Subcommand)]
enum KeystoreCommand {
    Init {
        #[arg(long, default_value = "armory-ca")]
        ca_name: String,
        #[arg(long, default_value = "")]
        ca_seed: String,
        /// Comma-separated domain ids.
        #[arg(long, default_value = "0")]
        domains: String,
        #[arg(long, default_value_t = CompileOptions::DEFAULT_VALIDITY_DAYS)]
        validity_days: u32,
        #[arg(long, value_enum, default_value_t = Mapping::Ardent)]
        mapping: Mapping,
        #[arg(long, value_enum, default_value_t = Signer::Mock)]
        signer: Signer,
    },
    Create {
        subject: String,
        #[arg(required = true)]
        policies: Vec<PathBuf>,
        /// Add the default partition to every ALLOW rule.
        #[arg(long)]
        amend: bool,
        #[arg(long)]
        fold: bool,
    },
    Build(Targets),
    Install(Targets),
    /// Check installed signatures and parse the installed permissions.
    Verify(Targets),
}

#[derive(Debug, Args)]
struct Targets {
    subjects: Vec<String>,
    /// Every staged package.
    #[arg(long, conflicts_with = "subjects")]
    all: bool,
}

#[derive(Debug, Args)]
struct CompileArgs {
    policy: PathBuf,
    subject: String,
    #[arg(long, value_enum, default_value_t = Mapping::Ardent)]
    mode: Mapping,
    #[arg(long, default_value = "0")]
    domains: String,
    #[arg(long, default_value_t = CompileOptions::DEFAULT_VALIDITY_DAYS)]
    validity_days: u32,
    #[arg(long)]
    amend: bool,
    #[arg(long)]
    fold: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum PdpCommand {
    /// Decide one transport request: exit 0 on ALLOW, 1 on DENY or ERROR.
    Eval {
        permissions: PathBuf,
        #[arg(long)]
        subject_name: String,
        #[arg(long, default_value_t = 0)]
        domain: u32,
        #[arg(long)]
        action: String,
        #[arg(long)]
        topic: String,
        /// Repeat for several partitions; none means the default partition.
        #[arg(long)]
        partition: Vec<String>,
        #[arg(long)]
        tag: Vec<String>,
        /// Evaluation time; defaults to the clock.
        #[arg(long)]
        at: Option<String>,
    },
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Policy to compile; defaults to the scenario's extracted minimal policy.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mapping::Ardent)]
    mode: Mapping,
    #[arg(long, value_enum, default_value_t = Model::Ideal)]
    transport_model: Model,
    /// Subjects compiled with the default-partition amendment.
    #[arg(long)]
    amend: Vec<String>,
    #[arg(long)]
    fold: bool,
    #[arg(long, default_value_t = 0)]
    domain: u32,
    /// Write the transport labelling as Graphviz.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the full JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// A failed command: exit code plus message for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.to_string(),
        }
    }
}

impl From<KeystoreError> for Failure {
    fn from(e: KeystoreError) -> Self {
        match e {
            KeystoreError::Policy(_) | KeystoreError::InvalidConfig(_) => Failure::usage(e),
            _ => Failure::internal(e),
        }
    }
}

struct Context<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    format: Format,
    clock: Clock,
    keystore: PathBuf,
}

impl Context<'_> {
    fn emit(&mut self, text: &str) -> Result<(), Failure> {
        self.out.write_all(text.as_bytes()).map_err(Failure::internal)
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<(), Failure> {
        self.emit(&to_json_text(value))
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.err, "warning: {text}");
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let mut ctx = Context {
        out,
        err,
        format: cli.format,
        clock: cli.clock.unwrap_or_default(),
        keystore: cli.keystore,
    };
    let result = match cli.command {
        Command::Policy(PolicyCommand::Check {
            policy,
            subject,
            verb,
            kind,
            object,
        }) => policy_check(&mut ctx, &policy, &subject, &verb, &kind, &object),
        Command::Keystore(cmd) => keystore(&mut ctx, cmd),
        Command::Compile(args) => compile(&mut ctx, args),
        Command::Pdp(PdpCommand::Eval {
            permissions,
            subject_name,
            domain,
            action,
            topic,
            partition,
            tag,
            at,
        }) => pdp_eval(&mut ctx, &permissions, subject_name, domain, &action, topic, partition, tag, at),
        Command::Extract(args) => extract(&mut ctx, args),
        Command::Verify(args) => verify(&mut ctx, args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(ctx.err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<PolicyTree, Failure> {
    load_policy(path).map_err(Failure::usage)
}

#[derive(Serialize)]
struct CheckJson {
    subject: String,
    verb: String,
    kind: String,
    object: String,
    outcome: String,
    reason: String,
    matched_rules: Vec<String>,
}

fn policy_check(
    ctx: &mut Context<'_>,
    policy: &Path,
    subject: &str,
    verb: &str,
    kind: &str,
    object: &str,
) -> Result<i32, Failure> {
    let tree = load(policy)?;
    let verb: Verb = verb.parse().map_err(Failure::usage)?;
    let kind: ObjectKind = kind.parse().map_err(Failure::usage)?;
    if !kind.allows(verb) {
        return Err(Failure::usage(format!("verb `{verb}` is not legal for {kind} objects")));
    }
    let request = AccessRequest::new(subject, verb, kind, object).map_err(Failure::usage)?;
    let decision = evaluate_request(&tree, &request).map_err(Failure::usage)?;
    let matched: Vec<String> = decision.matched_rules.iter().map(ToString::to_string).collect();
    match ctx.format {
        Format::Text => {
            let mut s = describe(&decision);
            s.push('\n');
            for m in &matched {
                s.push_str("matched: ");
                s.push_str(m);
                s.push('\n');
            }
            ctx.emit(&s)?;
        }
        Format::Json => ctx.json(&CheckJson {
            subject: request.subject.clone(),
            verb: verb.to_string(),
            kind: kind.to_string(),
            object: request.object.clone(),
            outcome: decision.outcome.to_string(),
            reason: decision.reason.as_str().to_string(),
            matched_rules: matched,
        })?,
    }
    Ok(if decision.is_allow() { EXIT_OK } else { EXIT_DENIED })
}

#[derive(Serialize)]
struct PackageJson {
    subject: String,
    package: String,
    dir: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

fn relative(ks: &Keystore, dir: &Path) -> String {
    dir.strip_prefix(ks.root()).unwrap_or(dir).display().to_string()
}

fn targets(ks: &Keystore, t: Targets) -> Result<Vec<String>, Failure> {
    if t.all {
        return Ok(ks.packages()?);
    }
    if t.subjects.is_empty() {
        return Err(Failure::usage("name at least one subject or pass --all"));
    }
    Ok(t.subjects)
}

fn report_packages(ctx: &mut Context<'_>, verb: &str, items: Vec<PackageJson>) -> Result<(), Failure> {
    match ctx.format {
        Format::Json => ctx.json(&items),
        Format::Text => {
            let mut s = String::new();
            for p in &items {
                s.push_str(&format!("{verb} {} -> {}\n", p.subject, p.dir));
            }
            ctx.emit(&s)
        }
    }
}

fn keystore(ctx: &mut Context<'_>, cmd: KeystoreCommand) -> Result<i32, Failure> {
    let root = ctx.keystore.clone();
    match cmd {
        KeystoreCommand::Init {
            ca_name,
            ca_seed,
            domains,
            validity_days,
            mapping,
            signer,
        } => {
            let config = KeystoreConfig {
                ca_name,
                ca_seed,
                domains: parse_domains(&domains).map_err(Failure::usage)?,
                validity_days,
                mapping: mapping.into(),
                signer: match signer {
                    Signer::Mock => SignerKind::Mock,
                    Signer::External => SignerKind::External,
                },
            };
            let ks = Keystore::init(&root, config, ctx.clock)?;
            #[derive(Serialize)]
            struct InitJson<'a> {
                ca_name: &'a str,
                mapping: String,
                domains: Vec<u32>,
                validity_days: u32,
            }
            match ctx.format {
                Format::Json => ctx.json(&InitJson {
                    ca_name: &ks.config().ca_name,
                    mapping: ks.config().mapping.to_string(),
                    domains: ks.config().domains.iter().copied().collect(),
                    validity_days: ks.config().validity_days,
                })?,
                Format::Text => ctx.emit(&format!("initialized keystore {}\n", root.display()))?,
            }
            Ok(EXIT_OK)
        }
        KeystoreCommand::Create {
            subject,
            policies,
            amend,
            fold,
        } => {
            let ks = Keystore::open(&root, ctx.clock)?;
            let options = PackageOptions {
                amend_empty_partition: amend,
                fold,
            };
            let (manifest, warnings) = ks.create_package(&subject, &policies, options)?;
            for w in &warnings {
                ctx.warn(w);
            }
            let dir = relative(&ks, &ks.src_dir(&subject));
            report_packages(
                ctx,
                "created",
                vec![PackageJson {
                    subject: manifest.subject.clone(),
                    package: manifest.name(),
                    dir,
                    warnings,
                }],
            )?;
            Ok(EXIT_OK)
        }
        KeystoreCommand::Build(t) => phase(ctx, &root, t, "built", |ks, s| ks.build_package(s).map(Some)),
        KeystoreCommand::Install(t) => phase(ctx, &root, t, "installed", |ks, s| ks.install_package(s).map(Some)),
        KeystoreCommand::Verify(t) => phase(ctx, &root, t, "verified", |ks, s| {
            ks.verify_installed(s).map(|_| Some(ks.install_dir(s)))
        }),
    }
}

fn phase(
    ctx: &mut Context<'_>,
    root: &Path,
    t: Targets,
    verb: &str,
    op: impl Fn(&Keystore, &str) -> Result<Option<PathBuf>, KeystoreError>,
) -> Result<i32, Failure> {
    let ks = Keystore::open(root, ctx.clock)?;
    let mut items = Vec::new();
    for subject in targets(&ks, t)? {
        let dir = op(&ks, &subject)?.map(|d| relative(&ks, &d)).unwrap_or_default();
        items.push(PackageJson {
            package: armory_core::dds::mangle_subject(&subject),
            subject,
            dir,
            warnings: Vec::new(),
        });
    }
    report_packages(ctx, verb, items)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CriteriaJson {
    topics: Vec<String>,
    partitions: Vec<String>,
    tags: Vec<String>,
}

#[derive(Serialize)]
struct RuleJson {
    qualifier: String,
    domains: Vec<u32>,
    sources: Vec<String>,
    criteria: BTreeMap<String, CriteriaJson>,
}

#[derive(Serialize)]
struct GrantJson {
    name: String,
    subject_name: String,
    not_before: String,
    not_after: String,
    default: String,
    rules: Vec<RuleJson>,
}

#[derive(Serialize)]
struct DocumentJson {
    source_digest: String,
    grants: Vec<GrantJson>,
}

fn document_json(doc: &PermissionsDocument) -> DocumentJson {
    DocumentJson {
        source_digest: doc.source_digest().to_string(),
        grants: doc
            .grants()
            .iter()
            .map(|g| GrantJson {
                name: g.name.clone(),
                subject_name: g.subject_name.clone(),
                not_before: format_rfc3339(g.not_before),
                not_after: format_rfc3339(g.not_after),
                default: g.default.to_string(),
                rules: g
                    .rules
                    .iter()
                    .map(|r| RuleJson {
                        qualifier: r.qualifier.to_string(),
                        domains: r.domains.iter().copied().collect(),
                        sources: r.sources.clone(),
                        criteria: r
                            .actions()
                            .map(|a| {
                                let c = r.criteria(a).expect("listed action");
                                (
                                    a.to_string(),
                                    CriteriaJson {
                                        topics: c.topics.clone(),
                                        partitions: c.partitions.clone(),
                                        tags: c.tags.clone(),
                                    },
                                )
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn compile(ctx: &mut Context<'_>, args: CompileArgs) -> Result<i32, Failure> {
    let tree = load(&args.policy)?;
    let opts = CompileOptions {
        now: ctx.clock.now(),
        validity_days: args.validity_days,
        domains: parse_domains(&args.domains).map_err(Failure::usage)?,
        amend_empty_partition: args.amend,
        fold: args.fold,
    };
    let doc = compile_permissions(&tree, &args.subject, args.mode.into(), &opts).map_err(Failure::usage)?;
    let text = match ctx.format {
        Format::Text => write_permissions(&doc),
        Format::Json => to_json_text(&document_json(&doc)),
    };
    match args.output {
        Some(path) => write_file(&path, &text)?,
        None => ctx.emit(&text)?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PdpJson {
    subject_name: String,
    domain: u32,
    action: String,
    topic: String,
    partitions: Vec<String>,
    tags: Vec<String>,
    at: String,
    value: String,
    grant: Option<usize>,
    rule: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn pdp_eval(
    ctx: &mut Context<'_>,
    path: &Path,
    subject_name: String,
    domain: u32,
    action: &str,
    topic: String,
    partitions: Vec<String>,
    tags: Vec<String>,
    at: Option<String>,
) -> Result<i32, Failure> {
    let doc = parse_permissions(&read_file(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let action: DdsAction = action.parse().map_err(Failure::usage)?;
    let at = match at {
        Some(s) => parse_rfc3339(&s).map_err(Failure::usage)?,
        None => ctx.clock.now(),
    };
    let request = TransportRequest {
        subject_name,
        domain,
        action,
        topic,
        partitions,
        tags,
        at,
    };
    let outcome = pdp_evaluate(&doc, &request);
    match ctx.format {
        Format::Text => {
            let mut s = outcome.value.to_string();
            if let Some(g) = outcome.grant {
                s.push_str(&format!(" grant={g}"));
            }
            match outcome.rule {
                Some(r) => s.push_str(&format!(" rule={r}")),
                None if outcome.grant.is_some() => s.push_str(" rule=default"),
                None => {}
            }
            s.push('\n');
            ctx.emit(&s)?;
        }
        Format::Json => ctx.json(&PdpJson {
            subject_name: request.subject_name.clone(),
            domain,
            action: action.to_string(),
            topic: request.topic.clone(),
            partitions: request.partitions.clone(),
            tags: request.tags.clone(),
            at: format_rfc3339(at),
            value: outcome.value.to_string(),
            grant: outcome.grant,
            rule: outcome.rule,
        })?,
    }
    Ok(if outcome.value.is_allow() { EXIT_OK } else { EXIT_DENIED })
}

#[derive(Serialize)]
struct RuleSummaryJson {
    qualifier: String,
    kind: String,
    verbs: Vec<String>,
    objects: Vec<String>,
}

#[derive(Serialize)]
struct ProfileJson {
    name: String,
    attach: Vec<String>,
    rules: Vec<RuleSummaryJson>,
}

fn extract(ctx: &mut Context<'_>, args: ExtractArgs) -> Result<i32, Failure> {
    let scenario = parse_scenario(&read_file(&args.scenario)?).map_err(Failure::usage)?;
    let tree = extract_min_policy(&scenario);
    let text = match ctx.format {
        Format::Text => write_policy(&tree),
        Format::Json => {
            let profiles: Vec<ProfileJson> = tree
                .profiles
                .iter()
                .map(|p| ProfileJson {
                    name: p.name.clone(),
                    attach: p.attachments.iter().map(ToString::to_string).collect(),
                    rules: p
                        .rules
                        .iter()
                        .map(|r| RuleSummaryJson {
                            qualifier: r.qualifier.to_string(),
                            kind: r.kind.to_string(),
                            verbs: r.verbs.iter().map(ToString::to_string).collect(),
                            objects: r.objects.iter().map(ToString::to_string).collect(),
                        })
                        .collect(),
                })
                .collect();
            to_json_text(&profiles)
        }
    };
    match args.output {
        Some(path) => write_file(&path, &text)?,
        None => ctx.emit(&text)?,
    }
    Ok(EXIT_OK)
}

fn summary_text(report: &VerificationReport) -> String {
    let mut s = String::new();
    for source in [LabelSource::Semantic, LabelSource::Transport] {
        let c = report.counts(source);
        s.push_str(&format!(
            "{:<10} tp={} tn={} fp={} fn={}\n",
            format!("{}:", source.as_str()),
            c.tp,
            c.tn,
            c.fp,
            c.fn_
        ));
    }
    s.push_str(&format!("pass: {}\n", report.pass));
    for source in [LabelSource::Semantic, LabelSource::Transport] {
        for class in [EdgeClass::FalsePositive, EdgeClass::FalseNegative] {
            for p in report.probes_in(source, class) {
                s.push_str(&format!("{class} ({}): {p}\n", source.as_str()));
            }
        }
    }
    s
}

fn verify(ctx: &mut Context<'_>, args: VerifyArgs) -> Result<i32, Failure> {
    let scenario = parse_scenario(&read_file(&args.scenario)?).map_err(Failure::usage)?;
    let tree = match &args.policy {
        Some(p) => load(p)?,
        None => extract_min_policy(&scenario),
    };
    let mapping: MappingMode = args.mode.into();
    let amended: BTreeSet<String> = args.amend.iter().cloned().collect();
    if let Some(unknown) = amended.iter().find(|s| !scenario.subjects().contains(s)) {
        return Err(Failure::usage(format!("--amend names `{unknown}`, which is not a scenario subject")));
    }
    let now = ctx.clock.now();
    let opts = CompileOptions {
        domains: BTreeSet::from([args.domain]),
        ..CompileOptions::at(now)
    };
    let mut docs = compile_scenario(&scenario, &tree, mapping, &opts, &amended).map_err(Failure::usage)?;
    if args.fold {
        for doc in docs.values_mut() {
            *doc = fold_rules(doc);
        }
    }
    let setup = TransportSetup {
        mapping,
        model: args.transport_model.into(),
        domain: args.domain,
        at: now,
    };
    let report = verify_scenario(&scenario, &tree, &docs, &setup).map_err(Failure::usage)?;
    let json = to_json_text(&report_json(&report, &setup, &amended));
    if let Some(path) = &args.report {
        write_file(path, &json)?;
    }
    if let Some(path) = &args.dot {
        write_file(path, &report_to_dot(&report, LabelSource::Transport))?;
    }
    match ctx.format {
        Format::Text => ctx.emit(&summary_text(&report))?,
        Format::Json => ctx.emit(&json)?,
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_DENIED })
}
