#include "icl_ttc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "icl_ttc/errors.hpp"

namespace icl_ttc {

std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::continuous_risk: return "continuous-risk";
        case ExperimentKind::binary_accuracy: return "binary-accuracy";
        case ExperimentKind::markov_exact: return "markov-exact";
        case ExperimentKind::fit_predict: return "fit-predict";
        default: return "validate";
    }
}

std::optional<ExperimentKind> parse_experiment_name(const std::string& name) {
    for (auto k : {ExperimentKind::continuous_risk, ExperimentKind::binary_accuracy,
                   ExperimentKind::markov_exact, ExperimentKind::fit_predict, ExperimentKind::validate})
        if (experiment_name(k) == name) return k;
    return std::nullopt;
}

std::string sweep_method_name(SweepMethod m) {
    switch (m) {
        case SweepMethod::avg: return "avg";
        case SweepMethod::bon: return "bon";
        case SweepMethod::mv: return "mv";
        case SweepMethod::gd: return "gd";
        default: return "greedy";
    }
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

// Keys accepted per section. Aliases resolve to one field later.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"experiment", {"kind", "seed", "output_dir", "plot"}},
        {"task",
         {"d", "n", "prior", "k", "omega", "sigma_eps", "sigma_eps_sq", "eta", "covariance.kind",
          "covariance.r"}},
        {"sampler", {"variant", "sigma", "sigma_sq", "form", "k"}},
        {"sweep", {"t", "t_list", "n_list_samples", "methods", "trials", "reward", "t_query"}},
        {"validate", {"criteria", "scale"}},
        {"fit", {"table"}},
    };
    return s;
}

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::size_t line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ParseError(line_of(key), key, what);
    }

    std::uint64_t u64(const std::string& key) const {
        const std::string& v = raw(key);
        std::uint64_t out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size() || v.empty())
            fail(key, "expected a non-negative integer, got '" + v + "'");
        return out;
    }

    std::size_t count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

    double real(const std::string& key) const { return parse_real(key, raw(key)); }

    double parse_real(const std::string& key, const std::string& v) const {
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size() || v.empty())
            fail(key, "expected a real number, got '" + v + "'");
        return out;
    }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) fail(key, "empty list element");
            out.push_back(item);
        }
        if (out.empty()) fail(key, "empty list");
        return out;
    }

    std::vector<std::size_t> count_list(const std::string& key) const {
        std::vector<std::size_t> out;
        for (const auto& item : list(key)) {
            std::size_t v = 0;
            auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc() || p != item.data() + item.size())
                fail(key, "expected a list of non-negative integers, got '" + item + "'");
            out.push_back(v);
        }
        return out;
    }

    bool boolean(const std::string& key) const {
        const std::string& v = raw(key);
        if (v == "true") return true;
        if (v == "false") return false;
        fail(key, "expected true or false, got '" + v + "'");
    }

private:
    std::map<std::string, Entry> entries_;
};

bool binary_experiment(ExperimentKind k) {
    return k == ExperimentKind::binary_accuracy || k == ExperimentKind::markov_exact ||
           k == ExperimentKind::fit_predict;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, std::optional<ExperimentKind> kind) {
    std::map<std::string, Entry> entries;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(lineno, "", "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section)) throw ParseError(lineno, section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "", "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ParseError(lineno, key, "key outside of any section");
        if (!schema().at(section).count(key)) throw ParseError(lineno, key, "unknown key in [" + section + "]");
        const std::string full = section + "." + key;
        if (entries.count(full)) throw ParseError(lineno, key, "duplicate key");
        if (value.empty()) throw ParseError(lineno, key, "missing value");
        entries[full] = Entry{value, lineno};
    }

    Reader r(std::move(entries));
    ExperimentConfig c;

    if (r.has("experiment.kind")) {
        auto k = parse_experiment_name(r.raw("experiment.kind"));
        if (!k) r.fail("experiment.kind", "unknown experiment kind '" + r.raw("experiment.kind") + "'");
        if (kind && *kind != *k)
            r.fail("experiment.kind", "config is for '" + r.raw("experiment.kind") +
                                          "' but the subcommand is '" + experiment_name(*kind) + "'");
        c.experiment = *k;
    } else if (kind) {
        c.experiment = *kind;
    } else {
        throw ParseError(0, "kind", "missing required key [experiment] kind");
    }
    if (r.has("experiment.seed")) c.seed = r.u64("experiment.seed");
    if (r.has("experiment.output_dir")) c.output_dir = r.raw("experiment.output_dir");
    if (r.has("experiment.plot")) c.plot = r.boolean("experiment.plot");

    if (r.has("validate.criteria")) {
        for (std::size_t v : r.count_list("validate.criteria")) {
            if (v < 1 || v > 11) r.fail("validate.criteria", "criteria are numbered 1 to 11");
            c.criteria.push_back(static_cast<int>(v));
        }
    }
    if (r.has("validate.scale")) {
        const std::string& v = r.raw("validate.scale");
        if (v == "quick") c.scale = ValidateScale::quick;
        else if (v == "full") c.scale = ValidateScale::full;
        else r.fail("validate.scale", "expected quick or full");
    }
    if (r.has("fit.table")) c.table_path = r.raw("fit.table");

    if (c.experiment == ExperimentKind::validate) {
        for (const char* key : {"task.d", "task.n", "sampler.variant", "sweep.t", "sweep.t_list"})
            if (r.has(key)) r.fail(key, "not used by the validate experiment");
        return c;
    }

    // [task]
    auto require = [&](const std::string& key) {
        if (!r.has(key)) {
            const auto dot = key.find('.');
            throw ParseError(0, key, "missing required key [" + key.substr(0, dot) + "] " + key.substr(dot + 1));
        }
    };
    require("task.d");
    require("task.n");
    require("task.eta");
    c.task.d = r.count("task.d");
    c.task.n = r.count("task.n");
    c.task.step_size = r.real("task.eta");
    bool binary = binary_experiment(c.experiment);
    if (r.has("task.prior")) {
        const std::string& v = r.raw("task.prior");
        if (v == "binary") binary = true;
        else if (v == "gaussian") binary = false;
        else r.fail("task.prior", "expected gaussian or binary");
    }
    if (binary) {
        require("task.k");
        if (r.has("task.omega")) r.fail("task.omega", "omega applies to the gaussian prior only");
        c.task.prior = BinarySparsePrior{r.count("task.k")};
    } else {
        if (r.has("task.k")) r.fail("task.k", "k applies to the binary prior only");
        c.task.prior = GaussianPrior{r.has("task.omega") ? r.real("task.omega") : 1.0};
    }
    if (r.has("task.sigma_eps") && r.has("task.sigma_eps_sq"))
        r.fail("task.sigma_eps_sq", "give either sigma_eps or sigma_eps_sq");
    if (r.has("task.sigma_eps")) c.task.label_noise_sd = r.real("task.sigma_eps");
    if (r.has("task.sigma_eps_sq")) {
        const double v = r.real("task.sigma_eps_sq");
        if (v < 0.0) r.fail("task.sigma_eps_sq", "must be >= 0");
        c.task.label_noise_sd = std::sqrt(v);
    }
    c.task.covariance.d = c.task.d;
    if (r.has("task.covariance.kind")) {
        const std::string& v = r.raw("task.covariance.kind");
        if (v == "identity") c.task.covariance.kind = CovarianceKind::identity;
        else if (v == "polynomial-decay") c.task.covariance.kind = CovarianceKind::polynomial_decay;
        else r.fail("task.covariance.kind", "expected identity or polynomial-decay");
    }
    if (r.has("task.covariance.r")) c.task.covariance.r = r.real("task.covariance.r");
    try {
        c.task.validate();
    } catch (const ConfigError& e) {
        throw ParseError(r.line_of("task.d"), "task", e.what());
    }

    // [sampler]
    std::string variant = binary ? "binary-sample" : "deterministic";
    if (r.has("sampler.variant")) variant = r.raw("sampler.variant");
    else if (c.experiment == ExperimentKind::continuous_risk) require("sampler.variant");
    if (r.has("sampler.sigma") && r.has("sampler.sigma_sq"))
        r.fail("sampler.sigma_sq", "give either sigma or sigma_sq");
    double sigma = 0.0;
    const bool has_sigma = r.has("sampler.sigma") || r.has("sampler.sigma_sq");
    if (r.has("sampler.sigma")) sigma = r.real("sampler.sigma");
    if (r.has("sampler.sigma_sq")) {
        const double v = r.real("sampler.sigma_sq");
        if (v < 0.0) r.fail("sampler.sigma_sq", "must be >= 0");
        sigma = std::sqrt(v);
    }
    const std::string sigma_key = r.has("sampler.sigma") ? "sampler.sigma" : "sampler.sigma_sq";
    const bool noise = variant == "constant-noise" || variant == "linear-noise";
    if (has_sigma && !noise) r.fail(sigma_key, "sigma applies to constant-noise and linear-noise only");
    if (noise && !has_sigma) require("sampler.sigma");
    if (r.has("sampler.form") && variant != "linear-noise")
        r.fail("sampler.form", "form applies to linear-noise only");
    const bool binary_variant = variant == "binary-sample" || variant == "binary-greedy";
    if (r.has("sampler.k") && !binary_variant) r.fail("sampler.k", "k applies to binary decoders only");
    std::size_t k = c.task.sparsity();
    if (r.has("sampler.k")) {
        k = r.count("sampler.k");
        if (k != c.task.sparsity()) r.fail("sampler.k", "sampler k must equal task k");
    }
    if (variant == "deterministic") c.sampler = Deterministic{};
    else if (variant == "constant-noise") c.sampler = ConstantNoise{sigma};
    else if (variant == "linear-noise") {
        LinearForm form = LinearForm::additive;
        if (r.has("sampler.form")) {
            const std::string& v = r.raw("sampler.form");
            if (v == "additive") form = LinearForm::additive;
            else if (v == "projective") form = LinearForm::projective;
            else r.fail("sampler.form", "expected additive or projective");
        }
        c.sampler = LinearNoise{sigma, form};
    } else if (variant == "binary-sample") c.sampler = BinarySample{k};
    else if (variant == "binary-greedy") c.sampler = BinaryGreedy{k};
    else r.fail("sampler.variant", "unknown sampler variant '" + variant + "'");
    if (binary_variant != binary)
        r.fail(r.has("sampler.variant") ? "sampler.variant" : "task.prior",
               "binary decoders require the binary prior and vice versa");
    try {
        validate_sampler(c.sampler, c.task.d);
    } catch (const ConfigError& e) {
        r.fail(r.has("sampler.variant") ? "sampler.variant" : "sampler", e.what());
    }

    // [sweep]
    if (r.has("sweep.t") && r.has("sweep.t_list")) r.fail("sweep.t_list", "give either t or t_list");
    if (!r.has("sweep.t") && !r.has("sweep.t_list")) require("sweep.t_list");
    c.sweep.t_list = r.has("sweep.t") ? std::vector<std::size_t>{r.count("sweep.t")} : r.count_list("sweep.t_list");
    if (r.has("sweep.n_list_samples")) c.sweep.n_list = r.count_list("sweep.n_list_samples");
    for (std::size_t v : c.sweep.n_list)
        if (v < 1) r.fail("sweep.n_list_samples", "N values must be at least 1");
    if (r.has("sweep.trials")) c.sweep.trials = r.count("sweep.trials");
    if (c.sweep.trials < 1) r.fail("sweep.trials", "trials must be at least 1");
    if (r.has("sweep.reward")) {
        const std::string& v = r.raw("sweep.reward");
        if (v == "oracle-l2") c.sweep.reward = RewardChoice::oracle_l2;
        else if (v == "sparsity-l1") c.sweep.reward = RewardChoice::sparsity_l1;
        else r.fail("sweep.reward", "expected oracle-l2 or sparsity-l1");
    }
    if (r.has("sweep.methods")) {
        for (const auto& m : r.list("sweep.methods")) {
            SweepMethod sm;
            if (m == "avg") sm = SweepMethod::avg;
            else if (m == "bon") sm = SweepMethod::bon;
            else if (m == "mv") sm = SweepMethod::mv;
            else if (m == "gd") sm = SweepMethod::gd;
            else if (m == "greedy") sm = SweepMethod::greedy;
            else r.fail("sweep.methods", "unknown method '" + m + "'");
            if ((sm == SweepMethod::mv || sm == SweepMethod::greedy) && !binary)
                r.fail("sweep.methods", "method '" + m + "' needs a binary task");
            if (sm == SweepMethod::gd && binary) r.fail("sweep.methods", "method 'gd' needs a continuous task");
            c.sweep.methods.push_back(sm);
        }
    } else {
        c.sweep.methods = {binary ? SweepMethod::mv : SweepMethod::avg};
    }
    if (r.has("sweep.t_query")) {
        if (c.experiment != ExperimentKind::fit_predict) r.fail("sweep.t_query", "t_query is used by fit-predict only");
        c.sweep.t_query = r.count_list("sweep.t_query");
    }
    if (c.experiment == ExperimentKind::fit_predict) {
        if (!r.has("sweep.t_query")) require("sweep.t_query");
        if (std::find(c.sweep.n_list.begin(), c.sweep.n_list.end(), 1) == c.sweep.n_list.end())
            r.fail("sweep.n_list_samples", "fit-predict needs N = 1 in the list");
    }
    if (c.experiment == ExperimentKind::markov_exact && c.task.sparsity() > 3)
        r.fail("task.k", "exact chains support k <= 3");
    for (std::size_t v : c.sweep.t_list)
        if (c.experiment != ExperimentKind::continuous_risk && v < 1)
            r.fail(r.has("sweep.t") ? "sweep.t" : "sweep.t_list", "t must be at least 1");
    return c;
}

std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream o;
    auto join = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
        return s;
    };
    o << "[experiment]\n";
    o << "kind = " << experiment_name(c.experiment) << "\n";
    o << "seed = " << c.seed << "\n";
    o << "output_dir = " << c.output_dir << "\n";
    o << "plot = " << (c.plot ? "true" : "false") << "\n";
    if (c.experiment == ExperimentKind::validate) {
        o << "\n[validate]\n";
        if (!c.criteria.empty()) {
            o << "criteria = ";
            for (std::size_t i = 0; i < c.criteria.size(); ++i) o << (i ? ", " : "") << c.criteria[i];
            o << "\n";
        }
        o << "scale = " << (c.scale == ValidateScale::quick ? "quick" : "full") << "\n";
        return o.str();
    }
    o << "\n[task]\n";
    o << "d = " << c.task.d << "\n";
    o << "n = " << c.task.n << "\n";
    if (c.task.binary()) {
        o << "prior = binary\n";
        o << "k = " << c.task.sparsity() << "\n";
    } else {
        o << "prior = gaussian\n";
        o << "omega = " << format_double(std::get<GaussianPrior>(c.task.prior).omega) << "\n";
    }
    o << "sigma_eps = " << format_double(c.task.label_noise_sd) << "\n";
    o << "eta = " << format_double(c.task.step_size) << "\n";
    o << "covariance.kind = "
      << (c.task.covariance.kind == CovarianceKind::identity ? "identity" : "polynomial-decay") << "\n";
    o << "covariance.r = " << format_double(c.task.covariance.r) << "\n";
    o << "\n[sampler]\n";
    o << "variant = " << sampler_name(c.sampler) << "\n";
    if (const auto* cn = std::get_if<ConstantNoise>(&c.sampler)) o << "sigma = " << format_double(cn->sigma) << "\n";
    if (const auto* ln = std::get_if<LinearNoise>(&c.sampler)) {
        o << "sigma = " << format_double(ln->sigma) << "\n";
        o << "form = " << (ln->form == LinearForm::additive ? "additive" : "projective") << "\n";
    }
    o << "\n[sweep]\n";
    o << "t_list = " << join(c.sweep.t_list) << "\n";
    o << "n_list_samples = " << join(c.sweep.n_list) << "\n";
    o << "methods = ";
    for (std::size_t i = 0; i < c.sweep.methods.size(); ++i)
        o << (i ? ", " : "") << sweep_method_name(c.sweep.methods[i]);
    o << "\n";
    o << "trials = " << c.sweep.trials << "\n";
    o << "reward = " << (c.sweep.reward == RewardChoice::oracle_l2 ? "oracle-l2" : "sparsity-l1") << "\n";
    if (!c.sweep.t_query.empty()) o << "t_query = " << join(c.sweep.t_query) << "\n";
    if (!c.table_path.empty()) o << "\n[fit]\ntable = " << c.table_path << "\n";
    return o.str();
}

}  // namespace icl_ttc
