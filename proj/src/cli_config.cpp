#include "intenreg/cli_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace intenreg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(std::uint8_t(s[a]))) ++a;
    while (b > a && std::isspace(std::uint8_t(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

[[noreturn]] void bad(const std::string& origin, int line, const std::string& why) {
    throw ValidationError(origin + ":" + std::to_string(line) + ": " + why);
}

double parse_double(const std::string& origin, int line, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) bad(origin, line, "trailing characters in number '" + v + "'");
        return d;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad(origin, line, "not a number: '" + v + "'");
    }
}

int parse_int(const std::string& origin, int line, const std::string& v) {
    try {
        std::size_t used = 0;
        const long n = std::stol(v, &used);
        if (used != v.size()) bad(origin, line, "trailing characters in integer '" + v + "'");
        return int(n);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad(origin, line, "not an integer: '" + v + "'");
    }
}

}  // namespace

void RunConfig::validate() const {
    loss.validate();
    stop.validate();
    if (train_batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
    if (!(train_lr > 0.0)) throw ValidationError("train.lr must be > 0");
    if (train_max_epochs < 1) throw ValidationError("train.max_epochs must be >= 1");
    if (!(direct_lr > 0.0)) throw ValidationError("direct.lr must be > 0");
    phantom.validate();
    bias.validate();
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.batch_size = train_batch_size;
    t.lr = train_lr;
    t.stop = stop;
    t.stop.max_iters = train_max_epochs;
    t.loss = loss;
    t.seed = seed;
    return t;
}

AdamState RunConfig::direct_adam() const {
    AdamState a;
    a.lr = direct_lr;
    return a;
}

PhantomConfig RunConfig::phantom_config() const {
    PhantomConfig p = phantom;
    p.seed = seed;
    return p;
}

RunConfig parse_run_config(const std::string& ini_text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(ini_text);
    std::string raw;
    std::string section;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']') bad(origin, line_no, "unterminated section header");
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section != "loss" && section != "stop" && section != "train" &&
                section != "direct" && section != "phantom" && section != "bias")
                bad(origin, line_no, "unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) bad(origin, line_no, "expected key = value");
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) bad(origin, line_no, "empty key or value");
        if (section.empty()) bad(origin, line_no, "key '" + key + "' outside any section");

        auto d = [&] { return parse_double(origin, line_no, val); };
        auto i = [&] { return parse_int(origin, line_no, val); };

        if (section == "loss") {
            if (key == "alpha") cfg.loss.alpha = d();
            else if (key == "beta") cfg.loss.beta = d();
            else if (key == "base") {
                const std::string b = lower(val);
                if (b == "mse") cfg.loss.base = LossConfig::Base::MSE;
                else if (b == "ncc") cfg.loss.base = LossConfig::Base::NCC;
                else bad(origin, line_no, "base must be mse or ncc, got '" + val + "'");
            } else if (key == "window") cfg.loss.window = i();
            else if (key == "c1") cfg.loss.c1 = d();
            else if (key == "c2") cfg.loss.c2 = d();
            else if (key == "c3") cfg.loss.c3 = d();
            else bad(origin, line_no, "unknown loss key '" + key + "'");
        } else if (section == "stop") {
            if (key == "delta") cfg.stop.delta = d();
            else if (key == "patience") cfg.stop.patience = i();
            else if (key == "max_iters") cfg.stop.max_iters = i();
            else bad(origin, line_no, "unknown stop key '" + key + "'");
        } else if (section == "train") {
            if (key == "batch_size") cfg.train_batch_size = i();
            else if (key == "lr") cfg.train_lr = d();
            else if (key == "max_epochs") cfg.train_max_epochs = i();
            else bad(origin, line_no, "unknown train key '" + key + "'");
        } else if (section == "direct") {
            if (key == "lr") cfg.direct_lr = d();
            else bad(origin, line_no, "unknown direct key '" + key + "'");
        } else if (section == "phantom") {
            if (key == "height") cfg.phantom.height = i();
            else if (key == "width") cfg.phantom.width = i();
            else if (key == "n_regions") cfg.phantom.n_regions = i();
            else if (key == "intensity_jitter") cfg.phantom.intensity_jitter = d();
            else if (key == "deform_amplitude") cfg.phantom.deform_amplitude = d();
            else if (key == "deform_smoothness") cfg.phantom.deform_smoothness = d();
            else if (key == "noise_sigma") cfg.phantom.noise_sigma = d();
            else bad(origin, line_no, "unknown phantom key '" + key + "'");
        } else {  // bias
            if (key == "amplitude") cfg.bias.amplitude = d();
            else if (key == "sigma") cfg.bias.sigma = d();
            else if (key == "center_row") cfg.bias.center_row = d();
            else if (key == "center_col") cfg.bias.center_col = d();
            else bad(origin, line_no, "unknown bias key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str(), path);
}

}  // namespace intenreg
