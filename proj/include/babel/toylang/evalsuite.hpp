// Mechanically checkable completion tasks, the stand-in benchmark.
#pragma once

#include "babel/model/decode.hpp"
#include "babel/toylang/generate.hpp"

namespace babel::toylang {

struct EvalTask {
  int task_id = 0;
  Tokens prompt;              // "<expr> ->"
  Value checker;              // interpreter output on the canonical solution
  std::set<Op> required_knowledge;  // exclusive ops used by the expr
};

struct EvalSuite {
  std::string language;
  std::vector<EvalTask> tasks;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["language"] = language;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : tasks) {
      nlohmann::ordered_json tj;
      tj["task_id"] = t.task_id;
      tj["prompt"] = t.prompt;
      if (t.checker.is_list)
        tj["checker"] = {{"list", t.checker.list}};
      else
        tj["checker"] = {{"int", t.checker.i}};
      auto rk = nlohmann::ordered_json::array();
      for (Op op : t.required_knowledge) rk.push_back(op_info(op).name);
      tj["required_knowledge"] = rk;
      arr.push_back(tj);
    }
    j["tasks"] = arr;
    j["version_hash"] = sha256_hex(arr.dump());
    return j;
  }

  static EvalSuite from_json(const nlohmann::json& j) {
    EvalSuite s;
    s.language = j.at("language");
    for (const auto& tj : j.at("tasks")) {
      EvalTask t;
      t.task_id = tj.at("task_id");
      t.prompt = tj.at("prompt").get<Tokens>();
      if (tj.at("checker").contains("list"))
        t.checker = Value::of_list(
            tj["checker"]["list"].get<std::vector<std::int64_t>>());
      else
        t.checker = Value::of_int(tj["checker"]["int"].get<std::int64_t>());
      for (const auto& n : tj.at("required_knowledge"))
        t.required_knowledge.insert(op_from_name(n.get<std::string>()));
      s.tasks.push_back(std::move(t));
    }
    return s;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write eval suite: " + path);
    f << to_json().dump(2) << "\n";
  }

  static EvalSuite load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read eval suite: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }
};

struct SuiteConfig {
  int n_tasks = 200;
  double exclusive_task_frac = 0.25;  // tasks forced to need exclusive ops
  int max_prompt_tokens = 24;
  GeneratorConfig gen;  // exclusivity applies to which ops are "exclusive",
                        // not to what tasks may use
};

// Tasks are drawn from the shared program distribution; a fixed fraction
// must use at least one op owned by another language, so solving them
// requires knowledge absent from this language's own corpus.
inline EvalSuite make_suite(const LanguageSpec& spec, std::uint64_t seed,
                            const SuiteConfig& cfg = SuiteConfig{}) {
  EvalSuite suite;
  suite.language = spec.id;
  Rng rng = make_rng(derive_seed(seed, fnv1a64("suite:" + spec.id)));
  std::set<Op> foreign_owned;
  for (const auto& [op, owner] : cfg.gen.exclusivity.owner)
    if (owner != spec.id) foreign_owned.insert(op);
  GeneratorConfig open = cfg.gen;
  open.exclusivity = ExclusivityPolicy{};  // tasks may use any op
  for (int i = 0; i < cfg.n_tasks; ++i) {
    bool want_exclusive =
        !foreign_owned.empty() &&
        (double)i < cfg.exclusive_task_frac * cfg.n_tasks;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 5000) throw Error("make_suite: cannot sample task");
      Document d = sample_document(rng, open, spec.id);
      std::set<Op> used;
      collect_ops(d.expr, used);
      // bare-literal documents ("5 4 -> 54") are echo tasks that any
      // model solves by copying; they carry no knowledge signal
      if (used.empty()) continue;
      bool has_exclusive = false;
      bool all_exclusive = true;
      for (Op op : used) {
        if (foreign_owned.count(op))
          has_exclusive = true;
        else
          all_exclusive = false;
      }
      // exclusive tasks probe transferred knowledge in isolation: every
      // keyword in the expression is one of the foreign-owned ops, so the
      // task is solvable exactly when that knowledge carried over
      if (want_exclusive ? !all_exclusive : has_exclusive) continue;
      Tokens prompt = render_expr(d.expr, spec);
      if ((int)prompt.size() + 1 > cfg.max_prompt_tokens) continue;
      prompt.push_back("->");
      EvalTask t;
      t.task_id = i;
      t.prompt = std::move(prompt);
      t.checker = d.value;
      for (Op op : used)
        if (foreign_owned.count(op)) t.required_knowledge.insert(op);
      suite.tasks.push_back(std::move(t));
      break;
    }
  }
  return suite;
}

struct EvalResult {
  std::string language;
  std::int64_t checkpoint_step = 0;
  std::vector<int> solved;     // task ids
  std::vector<int> overlong;   // tasks failed for exceeding context
  int n_tasks = 0;

  double pass_rate() const {
    if (n_tasks == 0) throw Error("eval result: empty suite");
    return (double)solved.size() / n_tasks;
  }

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"language", language},
                                  {"checkpoint_step", checkpoint_step},
                                  {"n_tasks", n_tasks},
                                  {"solved", solved},
                                  {"overlong", overlong},
                                  {"pass_rate", pass_rate()}};
  }

  static EvalResult from_json(const nlohmann::json& j) {
    EvalResult r;
    r.language = j.at("language");
    r.checkpoint_step = j.at("checkpoint_step");
    r.n_tasks = j.at("n_tasks");
    r.solved = j.at("solved").get<std::vector<int>>();
    r.overlong = j.at("overlong").get<std::vector<int>>();
    return r;
  }

  static EvalResult load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read eval result: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }
};

// Greedy pass@1: decode the completion, parse it as a value, compare with
// the checker. Deterministic.
inline EvalResult evaluate(const model::Checkpoint& ckpt,
                           const EvalSuite& suite, const Vocabulary& vocab,
                           int max_new = 32) {
  if (suite.tasks.empty()) throw Error("evaluate: empty suite");
  EvalResult res;
  res.language = suite.language;
  res.checkpoint_step = ckpt.step;
  res.n_tasks = (int)suite.tasks.size();
  TokenId semi = vocab.id(";");
  for (const auto& task : suite.tasks) {
    std::vector<TokenId> prompt = to_ids(task.prompt, vocab);
    if ((int)prompt.size() >= ckpt.config.context_length) {
      res.overlong.push_back(task.task_id);
      continue;
    }
    std::vector<TokenId> full =
        model::greedy_decode(ckpt, prompt, max_new, vocab.eos(), semi);
    Tokens completion;
    for (std::size_t i = prompt.size(); i < full.size(); ++i) {
      TokenId t = full[i];
      if (t == semi || t == vocab.eos()) break;
      completion.push_back(vocab.token(t));
    }
    try {
      Value v = parse_value(completion);
      if (v == task.checker) res.solved.push_back(task.task_id);
    } catch (const ParseError&) {
      // fail
    }
  }
  return res;
}

}  // namespace babel::toylang
