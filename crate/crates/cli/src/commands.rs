use std::path::Path;
use std::sync::Arc;

use attrib_core::attribution::{attribute as run_attribution, Method};
use attrib_core::chat::ChatKind;
use attrib_core::evaluation::{
    cohen_kappa, evaluate as run_evaluation, generate_synthetic, load_corpus, save_corpus, AnnotationSet, Noise,
    TABLE_NOTE,
};
use attrib_core::scoring::{CachedScorer, Scorer, ScorerBackendConfig, ScorerKind};
use attrib_core::{Dialogue, TargetResponse};
use attrib_service::ServiceConfig;
use serde_json::json;

use crate::output::{attribution_table, print_json};
use crate::{AttributeArgs, CliError, EvaluateArgs, GenerateArgs, KappaArgs, ScorerArgs, ScorerChoice, ServeArgs};

fn parse_method(name: &str) -> Result<Method, CliError> {
    name.parse().map_err(|e: attrib_core::Error| CliError::Usage(e.to_string()))
}

fn scorer_config(args: &ScorerArgs) -> Result<ScorerBackendConfig, CliError> {
    let config = ScorerBackendConfig {
        kind: match args.scorer {
            ScorerChoice::Lexical => ScorerKind::Lexical,
            ScorerChoice::Remote => ScorerKind::Remote,
        },
        endpoint_url: args.endpoint.clone(),
        model_name: args.model.clone(),
        timeout_ms: args.timeout_ms,
        ..ScorerBackendConfig::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn build_scorer(config: &ScorerBackendConfig, cache: Option<&Path>) -> Result<CachedScorer<Arc<dyn Scorer>>, CliError> {
    let inner = config.build()?;
    Ok(match cache {
        Some(path) => CachedScorer::with_file(inner, path)?,
        None => CachedScorer::new(inner),
    })
}

pub fn attribute(args: AttributeArgs) -> Result<(), CliError> {
    let method = parse_method(&args.method)?;
    let target = TargetResponse::new(args.target).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = scorer_config(&args.scorer)?;

    let dialogue = Dialogue::load(&args.dialogue)?;
    let scorer = build_scorer(&config, args.scorer.cache.as_deref())?;
    let result = run_attribution(&dialogue, &target, &scorer, method)?;
    if args.json {
        print_json(&result)
    } else {
        print!("{}", attribution_table(&result));
        Ok(())
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let methods: Vec<Method> = if args.all_methods { Method::ALL.to_vec() } else { vec![parse_method(&args.method)?] };
    if args.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let config = scorer_config(&args.scorer)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;

    let cases = load_corpus(&args.corpus)?;
    let scorer = build_scorer(&config, args.scorer.cache.as_deref())?;
    let reports = pool.install(|| {
        methods.iter().map(|&method| run_evaluation(&cases, method, &scorer)).collect::<Result<Vec<_>, _>>()
    })?;
    if args.json {
        print_json(&json!({ "note": TABLE_NOTE, "reports": reports }))
    } else {
        println!("# {TABLE_NOTE}");
        print!("{}", attrib_core::evaluation::format_table(&reports));
        Ok(())
    }
}

pub fn generate(args: GenerateArgs) -> Result<(), CliError> {
    if args.cases == 0 || args.turns < 2 {
        return Err(CliError::Usage("--cases must be at least 1 and --turns at least 2".into()));
    }
    let noise = if args.hard { Noise::Hard } else { Noise::Clean };
    let cases = generate_synthetic(args.cases, args.turns, args.seed, noise)?;
    save_corpus(&cases, &args.out)?;
    eprintln!("wrote {} cases to {}", cases.len(), args.out.display());
    Ok(())
}

pub fn kappa(args: KappaArgs) -> Result<(), CliError> {
    let a = AnnotationSet::load(&args.a)?;
    let b = AnnotationSet::load(&args.b)?;
    let kappa = cohen_kappa(&a, &b)?;
    if args.json {
        print_json(&json!({ "kappa": kappa, "n": a.labels.len(), "raters": [a.rater_id, b.rater_id] }))
    } else {
        println!("{kappa:.3}");
        Ok(())
    }
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let mut config = ServiceConfig::load(path)?;
            config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
            config
        }
        None => ServiceConfig::default(),
    };
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    if let Some(store) = args.store {
        config.store_path = store;
    }
    if let Some(cache) = args.cache {
        config.cache_path = Some(cache);
    }
    if let Some(script) = args.script {
        config.chat.kind = ChatKind::Scripted;
        config.chat.script_path = Some(script);
        config.chat.endpoint_url = None;
        config.chat.model_name = None;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Other(format!("runtime: {e}")))?;
    runtime.block_on(attrib_service::serve(config))?;
    Ok(())
}
