#include "adapod/config.hpp"

#include "adapod/error.hpp"
#include "adapod/parallel.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

namespace adapod {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry
{
    std::string key;
    std::string value;
    int line = 0;
};

double parse_real(const std::string & s)
{
    errno = 0;
    char * end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        throw std::invalid_argument("expected a real number, got '" + s + "'");
    return v;
}

long long parse_int(const std::string & s)
{
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::invalid_argument("expected an integer, got '" + s + "'");
    return v;
}

std::size_t parse_count(const std::string & s)
{
    const long long v = parse_int(s);
    if (v < 0)
        throw std::invalid_argument("expected a nonnegative integer, got '" + s + "'");
    return static_cast<std::size_t>(v);
}

int parse_small(const std::string & s)
{
    const long long v = parse_int(s);
    if (v < -1000000 || v > 1000000000)
        throw std::invalid_argument("integer out of range: '" + s + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string & s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string & s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = s.find(',', start);
        const std::string item(trim(std::string_view(s).substr(start, comma - start)));
        if (item.empty())
            throw std::invalid_argument("empty item in list '" + s + "'");
        out.push_back(item);
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string & s, Parse parse)
{
    std::vector<T> out;
    for (const auto & item : split_list(s))
        out.push_back(parse(item));
    return out;
}

ProblemKind parse_problem(const std::string & s)
{
    if (s == "convection_diffusion" || s == "cd")
        return ProblemKind::convection_diffusion;
    if (s == "burgers")
        return ProblemKind::burgers;
    throw std::invalid_argument("expected convection_diffusion or burgers, got '" + s + "'");
}

using Setter = std::function<void(RunConfig &, const std::string &)>;

const std::vector<std::pair<std::string, std::pair<std::string, Setter>>> & setters()
{
    static const std::vector<std::pair<std::string, std::pair<std::string, Setter>>> table = {
        {"problem", {"convection_diffusion | burgers (commands other than bench-*)", [](RunConfig &, const std::string & v) { parse_problem(v); }}},
        {"quick", {"reduced-cost profile", [](RunConfig & c, const std::string & v) { c.quick = parse_bool(v); }}},
        {"params", {"number of equidistant training parameters (convection-diffusion)", [](RunConfig & c, const std::string & v) { c.experiment.n_params = parse_count(v); }}},
        {"mu_min", {"lower end of the parameter range", [](RunConfig & c, const std::string & v) { c.experiment.mu_min = parse_real(v); }}},
        {"mu_max", {"upper end of the parameter range", [](RunConfig & c, const std::string & v) { c.experiment.mu_max = parse_real(v); }}},
        {"mus", {"comma-separated Burgers training parameters", [](RunConfig & c, const std::string & v) { c.experiment.mus = parse_list<double>(v, parse_real); }}},
        {"nu", {"viscosity / diffusivity", [](RunConfig & c, const std::string & v) { c.experiment.nu = parse_real(v); }}},
        {"tau", {"Burgers time step", [](RunConfig & c, const std::string & v) { c.experiment.tau = parse_real(v); }}},
        {"t_end", {"Burgers final time", [](RunConfig & c, const std::string & v) { c.experiment.t_end = parse_real(v); }}},
        {"nx", {"initial mesh cells in x", [](RunConfig & c, const std::string & v) { c.experiment.nx = parse_small(v); }}},
        {"ny", {"initial mesh cells in y", [](RunConfig & c, const std::string & v) { c.experiment.ny = parse_small(v); }}},
        {"tol", {"adaptive tolerance on the largest indicator", [](RunConfig & c, const std::string & v) { c.experiment.adapt.tol = parse_real(v); }}},
        {"theta", {"maximum-marking fraction in (0, 1]", [](RunConfig & c, const std::string & v) { c.experiment.adapt.theta = parse_real(v); }}},
        {"max_dof", {"stop refining beyond this many dofs", [](RunConfig & c, const std::string & v) { c.experiment.adapt.max_dof = parse_count(v); }}},
        {"max_rounds", {"maximum refinement rounds per solve", [](RunConfig & c, const std::string & v) { c.experiment.adapt.max_rounds = parse_small(v); }}},
        {"reference_factor", {"reference tolerance = tol * factor, in (0, 1)", [](RunConfig & c, const std::string & v) { c.experiment.reference_factor = parse_real(v); }}},
        {"r_values", {"comma-separated R values of the error table", [](RunConfig & c, const std::string & v) { c.experiment.r_values = parse_list<std::size_t>(v, parse_count); }}},
        {"r_star", {"R of the refinement sweep", [](RunConfig & c, const std::string & v) { c.experiment.r_star = parse_count(v); }}},
        {"sweep", {"comma-separated tolerance factors of the refinement sweep", [](RunConfig & c, const std::string & v) { c.experiment.sweep_factors = parse_list<double>(v, parse_real); }}},
        {"static", {"snapshots on one fixed mesh (snapshots command)", [](RunConfig & c, const std::string & v) { c.experiment.static_mode = parse_bool(v); }}},
        {"strategy", {"common | pairs", [](RunConfig & c, const std::string & v) { c.experiment.strategy = gramian_strategy_from_string(v); }}},
        {"eps_rank", {"relative eigenvalue cutoff of the POD rank", [](RunConfig & c, const std::string & v) { c.experiment.eps_rank = parse_real(v); }}},
        {"threads", {"worker threads (default: hardware threads)", [](RunConfig & c, const std::string & v) {
             const std::size_t n = parse_count(v);
             if (n == 0 || n > 1024)
                 throw std::invalid_argument("expected 1..1024 threads");
             c.experiment.threads = static_cast<unsigned>(n);
         }}},
        {"out", {"output directory", [](RunConfig & c, const std::string & v) { c.out_dir = v; }}},
        {"snapshots", {"snapshot file", [](RunConfig & c, const std::string & v) { c.snapshots_path = v; }}},
        {"basis", {"POD basis file", [](RunConfig & c, const std::string & v) { c.basis_path = v; }}},
        {"rom", {"reduced model file", [](RunConfig & c, const std::string & v) { c.rom_path = v; }}},
        {"R", {"reduced dimension (0: POD rank)", [](RunConfig & c, const std::string & v) { c.rom_dim = parse_count(v); }}},
        {"verbose", {"progress messages on stderr", [](RunConfig & c, const std::string & v) { c.verbose = parse_bool(v); }}},
    };
    return table;
}

const Setter * find_setter(const std::string & key)
{
    for (const auto & [name, entry] : setters())
        if (name == key)
            return &entry.second;
    return nullptr;
}

std::string join(const std::string & dir, const char * name)
{
    if (dir.empty() || dir == ".")
        return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

} // namespace

std::string RunConfig::snapshots_file() const
{
    return snapshots_path.empty() ? join(out_dir, "snapshots.txt") : snapshots_path;
}

std::string RunConfig::basis_file() const
{
    return basis_path.empty() ? join(out_dir, "basis.txt") : basis_path;
}

std::string RunConfig::rom_file() const
{
    return rom_path.empty() ? join(out_dir, "rom.txt") : rom_path;
}

ExperimentConfig experiment_defaults(ProblemKind problem, bool quick)
{
    return problem == ProblemKind::burgers ? ExperimentConfig::burgers_defaults(quick)
                                           : ExperimentConfig::convection_diffusion_defaults(quick);
}

ProblemKind problem_for_command(std::string_view command, ProblemKind configured)
{
    if (command == "bench-cd")
        return ProblemKind::convection_diffusion;
    if (command == "bench-burgers")
        return ProblemKind::burgers;
    return configured;
}

RunConfig parse_config(std::string_view text, std::string_view command, bool quick, const std::string & source)
{
    auto error = [&](int line, const std::string & msg) {
        return ConfigError(source + ":" + std::to_string(line) + ": " + msg);
    };

    std::vector<Entry> entries;
    std::map<std::string, int> lines;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);)
    {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw error(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty())
            throw error(line_no, "missing key before '='");
        if (!find_setter(key))
            throw error(line_no, "unknown key '" + key + "'");
        if (value.empty())
            throw error(line_no, "missing value for '" + key + "'");
        if (lines.count(key))
            throw error(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(lines[key]) + ")");
        lines[key] = line_no;
        entries.push_back({key, value, line_no});
    }

    // problem and profile select the defaults, so read them first
    ProblemKind configured = ProblemKind::convection_diffusion;
    for (const auto & e : entries)
    {
        try
        {
            if (e.key == "quick")
                quick = quick || parse_bool(e.value);
            else if (e.key == "problem")
                configured = parse_problem(e.value);
        }
        catch (const std::invalid_argument & ex)
        {
            throw error(e.line, e.key + ": " + ex.what());
        }
        if (e.key == "problem" && problem_for_command(command, configured) != configured)
            throw error(e.line, "problem: '" + e.value + "' conflicts with command " + std::string(command));
    }

    RunConfig cfg;
    cfg.command = std::string(command);
    cfg.quick = quick;
    cfg.source = source;
    cfg.experiment = experiment_defaults(problem_for_command(command, configured), quick);
    cfg.experiment.threads = default_thread_count();
    for (const auto & e : entries)
    {
        try
        {
            (*find_setter(e.key))(cfg, e.value);
        }
        catch (const std::invalid_argument & ex)
        {
            throw error(e.line, e.key + ": " + ex.what());
        }
    }
    cfg.quick = quick;
    cfg.key_lines = std::move(lines);
    return cfg;
}

void validate_config(const RunConfig & cfg)
{
    try
    {
        cfg.experiment.validate();
    }
    catch (const ConfigError & e)
    {
        const std::string msg = e.what();
        const std::string field = msg.substr(0, msg.find(' '));
        const auto it = cfg.key_lines.find(field);
        if (it != cfg.key_lines.end())
            throw ConfigError(cfg.source + ":" + std::to_string(it->second) + ": " + msg);
        throw;
    }
}

std::string format_experiment(const ExperimentConfig & cfg)
{
    // shortest text that reads back to the same double
    auto real = [](double v) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    };
    auto list = [](const auto & values, auto fmt) {
        std::string s;
        for (const auto & v : values)
            s += (s.empty() ? "" : ", ") + fmt(v);
        return s;
    };
    std::ostringstream out;
    out << "problem = " << to_string(cfg.problem) << '\n';
    if (cfg.problem == ProblemKind::convection_diffusion)
    {
        out << "params = " << cfg.n_params << '\n';
        out << "mu_min = " << real(cfg.mu_min) << '\n';
        out << "mu_max = " << real(cfg.mu_max) << '\n';
    }
    else
    {
        out << "mus = " << list(cfg.mus, real) << '\n';
        out << "tau = " << real(cfg.tau) << '\n';
        out << "t_end = " << real(cfg.t_end) << '\n';
    }
    out << "nu = " << real(cfg.nu) << '\n';
    out << "nx = " << cfg.nx << '\n';
    out << "ny = " << cfg.ny << '\n';
    out << "tol = " << real(cfg.adapt.tol) << '\n';
    out << "theta = " << real(cfg.adapt.theta) << '\n';
    out << "max_dof = " << cfg.adapt.max_dof << '\n';
    out << "max_rounds = " << cfg.adapt.max_rounds << '\n';
    out << "reference_factor = " << real(cfg.reference_factor) << '\n';
    out << "r_values = " << list(cfg.r_values, [](std::size_t r) { return std::to_string(r); }) << '\n';
    out << "r_star = " << cfg.r_star << '\n';
    out << "sweep = " << list(cfg.sweep_factors, real) << '\n';
    out << "static = " << (cfg.static_mode ? "true" : "false") << '\n';
    out << "strategy = " << to_string(cfg.strategy) << '\n';
    out << "eps_rank = " << real(cfg.eps_rank) << '\n';
    return out.str();
}

std::string config_keys_help()
{
    std::ostringstream out;
    out << "Config file: one 'key = value' per line, '#' starts a comment. Keys:\n";
    for (const auto & [name, entry] : setters())
    {
        out << "  " << name;
        for (std::size_t i = name.size(); i < 18; ++i)
            out << ' ';
        out << entry.first << '\n';
    }
    return out.str();
}

} // namespace adapod
