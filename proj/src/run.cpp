#include "modeqfi/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace modeqfi {

namespace {

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("validation", "config key '" + key + "' is not a number: '" +
                                                value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    throw ValidationError("validation", "config key '" + key + "' is not a boolean: '" + value +
                                            "'");
}

struct Record {
    std::string scenario;
    std::string param_name;
    std::optional<double> param_value;
    QfiReport report;
    std::optional<double> closed_form;
    std::optional<double> oracle;
    std::optional<double> oracle_dev;
};

Record evaluate_point(const std::string& scenario_name, const Params& params, bool with_oracle,
                      const std::string& param_name, std::optional<double> param_value)
{
    const Scenario scenario = build_scenario(scenario_name, params);
    Record rec;
    rec.scenario = scenario_name;
    rec.param_name = param_name;
    rec.param_value = param_value;
    rec.report = evaluate_scenario(scenario);
    rec.closed_form = scenario.expected_closed_form;
    if (with_oracle) {
        rec.oracle = scenario_oracle(scenario);
        rec.oracle_dev = std::abs(*rec.oracle - rec.report.unitary_term);
    }
    return rec;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string to_csv(const std::vector<Record>& records)
{
    std::ostringstream out;
    out << "scenario,param_name,param_value,classical,unitary,vacuum,total,closed_form,oracle,"
           "oracle_dev\n";
    for (const auto& r : records) {
        out << r.scenario << ',' << r.param_name << ','
            << (r.param_value ? format_double(*r.param_value) : "") << ','
            << format_double(r.report.classical_term) << ','
            << format_double(r.report.unitary_term) << ','
            << format_double(r.report.vacuum_term) << ',' << format_double(r.report.total) << ','
            << (r.closed_form ? format_double(*r.closed_form) : "") << ','
            << (r.oracle ? format_double(*r.oracle) : "") << ','
            << (r.oracle_dev ? format_double(*r.oracle_dev) : "") << '\n';
    }
    return out.str();
}

std::string to_json(const std::vector<Record>& records, const RunConfig& config)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json j;
        j["scenario"] = r.scenario;
        j["params"] = nlohmann::json::object();
        // param echo happens per record so sweep files are self-contained
        for (const auto& [key, value] : config.params)
            j["params"][key] = value;
        if (!r.param_name.empty()) {
            j["param_name"] = r.param_name;
            j["param_value"] = *r.param_value;
            j["params"][r.param_name] = format_double(*r.param_value);
        }
        j["classical"] = r.report.classical_term;
        j["unitary"] = r.report.unitary_term;
        j["vacuum"] = r.report.vacuum_term;
        j["total"] = r.report.total;
        j["closed_form"] = r.closed_form ? nlohmann::json(*r.closed_form) : nlohmann::json();
        j["oracle"] = r.oracle ? nlohmann::json(*r.oracle) : nlohmann::json();
        j["oracle_dev"] = r.oracle_dev ? nlohmann::json(*r.oracle_dev) : nlohmann::json();
        if (config.seed)
            j["seed"] = *config.seed;
        out.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
}

} // namespace

RunConfig parse_config_text(const std::string& text)
{
    RunConfig config;
    SweepSpec sweep;
    bool has_sweep = false;

    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos)
            line.erase(h);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("validation",
                                  "config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ValidationError("validation",
                                  "config line " + std::to_string(lineno) + ": empty key or value");

        if (key == "scenario")
            config.scenario = value;
        else if (key == "output")
            config.output = value;
        else if (key == "format") {
            if (value == "json")
                config.format = RunConfig::Format::json;
            else if (value == "csv")
                config.format = RunConfig::Format::csv;
            else
                throw ValidationError("validation", "format must be json or csv");
        } else if (key == "oracle")
            config.oracle = parse_bool(key, value);
        else if (key == "seed")
            config.seed = static_cast<long>(parse_double(key, value));
        else if (key == "sweep.param") {
            sweep.param = value;
            has_sweep = true;
        } else if (key == "sweep.lo") {
            sweep.lo = parse_double(key, value);
            has_sweep = true;
        } else if (key == "sweep.hi") {
            sweep.hi = parse_double(key, value);
            has_sweep = true;
        } else if (key == "sweep.n") {
            sweep.n = static_cast<int>(parse_double(key, value));
            has_sweep = true;
        } else
            config.params[key] = value;
    }
    if (has_sweep)
        config.sweep = sweep;
    if (config.scenario.empty())
        throw ValidationError("validation", "config must set 'scenario'");
    return config;
}

RunConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("file-io", "cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

int run(const RunConfig& config)
{
    std::vector<Record> records;
    try {
        if (config.sweep) {
            if (config.sweep->param.empty())
                throw ValidationError("validation", "sweep.param must be set");
            if (config.sweep->n < 2)
                throw ValidationError("validation", "sweep.n must be at least 2");
            if (!(config.sweep->lo < config.sweep->hi))
                throw ValidationError("validation", "sweep requires lo < hi");
        }
        // Validate the scenario and its parameters before producing output.
        build_scenario(config.scenario, config.params);

        if (config.sweep) {
            const SweepSpec& sweep = *config.sweep;
            std::vector<std::future<Record>> futures;
            futures.reserve(static_cast<std::size_t>(sweep.n));
            for (int i = 0; i < sweep.n; ++i) {
                const double value =
                    sweep.lo + (sweep.hi - sweep.lo) * i / static_cast<double>(sweep.n - 1);
                Params point = config.params;
                point[sweep.param] = format_double(value);
                futures.push_back(std::async(std::launch::async, evaluate_point, config.scenario,
                                             point, config.oracle, sweep.param,
                                             std::optional<double>(value)));
            }
            for (auto& f : futures)
                records.push_back(f.get());
        } else {
            records.push_back(
                evaluate_point(config.scenario, config.params, config.oracle, "", std::nullopt));
        }

        // Re-assert the breakdown identity before anything is serialized.
        for (const auto& r : records) {
            const double resum =
                r.report.classical_term + r.report.unitary_term + r.report.vacuum_term;
            if (std::abs(resum - r.report.total) > 1e-12 * std::max(1.0, std::abs(resum)))
                throw NumericalError("numerical", "report total drifted from its parts");
        }
    } catch (const ValidationError& e) {
        std::cerr << "modeqfi: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "modeqfi: " << e.what() << "\n";
        return 3;
    }

    const std::string payload =
        config.format == RunConfig::Format::csv ? to_csv(records) : to_json(records, config);
    if (config.output.empty()) {
        std::cout << payload;
    } else {
        std::ofstream out(config.output, std::ios::binary);
        if (!out) {
            std::cerr << "modeqfi: cannot write " << config.output << "\n";
            return 2;
        }
        out << payload;
    }
    return 0;
}

std::string list_scenarios()
{
    std::ostringstream out;
    for (const auto& name : scenario_names()) {
        const Scenario scenario = build_scenario(name, {});
        out << name << "\n    " << scenario.description << "\n    parameters:";
        if (name == "displaced-gaussian")
            out << " w, state, N, r, phase";
        else if (name == "oam-linear-phase")
            out << " ell, state, N, r, phase";
        else if (name == "spectroscopy-frequency")
            out << " T, sigma, omega0, state, N, r, phase";
        else if (name == "pulsed-time")
            out << " omega0, tau, state, N, r, phase";
        else if (name == "hg-displacement" || name == "hg-waist")
            out << " w, state, N, state2, N2, r, phase";
        else if (name == "mach-zehnder")
            out << " state, N, state2, N2, r, phase";
        else if (name == "superresolution")
            out << " sigma, s, eta, N, k, state, psf";
        out << "\n";
    }
    return out.str();
}

} // namespace modeqfi
