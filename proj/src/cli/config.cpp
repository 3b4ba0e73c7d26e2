#include "fgb/cli/config.hpp"

#include <cstdio>
#include <fstream>

#include "fgb/error.hpp"
#include "fgb/gan/nets.hpp"

namespace fgb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json named_paths(const std::vector<NamedPath>& v) {
    json out = json::array();
    for (const auto& n : v) out.push_back({{"name", n.name}, {"path", n.path.string()}});
    return out;
}

std::vector<NamedPath> read_named_paths(const json& j) {
    std::vector<NamedPath> out;
    for (const auto& e : j) out.push_back({e.at("name").get<std::string>(), e.at("path").get<std::string>()});
    return out;
}

json toy_json(const data::ToyOptions& t) {
    return {{"count", t.count},
            {"size", t.size},
            {"amd_fraction", t.amd_fraction},
            {"test_per_class", t.test_per_class},
            {"seed", t.seed}};
}

// Accepted keys and value kinds. Arrays of objects carry one template element.
json schema() {
    json s = RunConfig{}.to_json();
    s["pipeline"]["datasets"] = json::array({{{"kind", ""}, {"root", ""}, {"grades", ""}}});
    for (const char* key : {"fid", "classifiers", "studies"}) {
        s["report"][key] = json::array({{{"name", ""}, {"path", ""}}});
    }
    return s;
}

std::string kind_of(const json& v) {
    if (v.is_number()) return "number";
    if (v.is_boolean()) return "boolean";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
}

void check_keys(const json& user, const json& shape, const std::string& where) {
    const auto expected = kind_of(shape);
    const auto got = kind_of(user);
    if (expected != got) fail(ErrorCode::ConfigError, "config key '" + where + "': expected " + expected + ", got " + got);
    if (user.is_object()) {
        for (const auto& [key, value] : user.items()) {
            const auto child = where.empty() ? key : where + "." + key;
            if (!shape.contains(key)) fail(ErrorCode::ConfigError, "config key '" + child + "': unknown key");
            check_keys(value, shape.at(key), child);
        }
    } else if (user.is_array() && !shape.empty() && shape.front().is_object()) {
        for (std::size_t i = 0; i < user.size(); ++i) {
            check_keys(user[i], shape.front(), where + "[" + std::to_string(i) + "]");
        }
    }
}

json merged(json base, const json& over) {
    for (const auto& [key, value] : over.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object()) {
            base[key] = merged(base[key], value);
        } else {
            base[key] = value;
        }
    }
    return base;
}

// Runs one section's parser and validation, naming the section on failure.
template <typename Fn>
void section(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, "config section '" + name + "': " + e.what());
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, "config section '" + name + "': " + e.what());
    }
}

}  // namespace

json RunConfig::to_json() const {
    json datasets = json::array();
    for (const auto& d : pipeline.datasets) {
        datasets.push_back(
            {{"kind", std::string(data::to_string(d.kind))}, {"root", d.root.string()}, {"grades", d.grades.string()}});
    }
    json variants = json::array();
    for (auto v : gan.variants) variants.push_back(std::string(gan::to_string(v)));
    json archs = json::array();
    for (auto a : classifier.archs) archs.push_back(std::string(clf::to_string(a)));

    return {
        {"output_root", output_root.string()},
        {"pipeline",
         {{"datasets", datasets},
          {"seed", pipeline.seed},
          {"test_per_class", pipeline.test_per_class},
          {"preprocess", pipeline.preprocess},
          {"toy", toy_json(pipeline.toy)}}},
        {"gan",
         {{"variants", variants},
          {"image_size", gan.image_size},
          {"latent_dim", gan.latent_dim},
          {"width", gan.width},
          {"per_label", gan.per_label},
          {"train", gan.train},
          {"manifest", gan.manifest.string()}}},
        {"style",
         {{"config", style.config},
          {"epochs", style.epochs},
          {"seed", style.seed},
          {"manifest", style.manifest.string()},
          {"trainer_dir", style.trainer_dir.string()}}},
        {"gen",
         {{"kind", gen.kind},
          {"checkpoint", gen.checkpoint.string()},
          {"count", gen.count},
          {"label", gen.label},
          {"seed", gen.seed}}},
        {"fid",
         {{"extractor", fid.extractor.string()},
          {"native_dim", fid.native_dim},
          {"native_input", fid.native_input},
          {"native_width", fid.native_width},
          {"native_seed", fid.native_seed},
          {"set_a", fid.set_a.string()},
          {"set_b", fid.set_b.string()},
          {"samples", fid.samples}}},
        {"classifier",
         {{"spec", classifier.spec},
          {"mixing", classifier.mixing},
          {"p_grid", classifier.p_grid},
          {"seeds", classifier.seeds},
          {"archs", archs},
          {"manifest", classifier.manifest.string()}}},
        {"gradcam",
         {{"model", gradcam.model.string()},
          {"image", gradcam.image.string()},
          {"target_class", gradcam.target_class},
          {"layer", gradcam.layer},
          {"alpha", gradcam.alpha}}},
        {"study",
         {{"store", study.store.string()},
          {"manifest", study.manifest.string()},
          {"split", study.split},
          {"synthetic_dir", study.synthetic_dir.string()},
          {"host", study.host},
          {"port", study.port},
          {"image_size", study.image_size}}},
        {"report",
         {{"fid", named_paths(report.fid)},
          {"classifiers", named_paths(report.classifiers)},
          {"studies", named_paths(report.studies)},
          {"model", report.model.string()}}},
    };
}

RunConfig RunConfig::from_json(const json& user) {
    if (!user.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
    check_keys(user, schema(), "");
    const json j = merged(RunConfig{}.to_json(), user);

    RunConfig c;
    c.output_root = j.at("output_root").get<std::string>();

    section("pipeline", [&] {
        const auto& p = j.at("pipeline");
        for (const auto& d : p.at("datasets")) {
            DatasetSource src;
            src.kind = data::parse_source(d.at("kind").get<std::string>());
            src.root = d.value("root", std::string());
            src.grades = d.value("grades", std::string());
            if (src.root.empty()) fail(ErrorCode::ConfigError, "dataset root is empty");
            c.pipeline.datasets.push_back(src);
        }
        c.pipeline.seed = p.at("seed").get<std::uint64_t>();
        c.pipeline.test_per_class = p.at("test_per_class").get<int>();
        c.pipeline.preprocess = p.at("preprocess").get<bool>();
        const auto& t = p.at("toy");
        c.pipeline.toy = {.count = t.at("count").get<int>(),
                          .size = t.at("size").get<int>(),
                          .amd_fraction = t.at("amd_fraction").get<double>(),
                          .test_per_class = t.at("test_per_class").get<int>(),
                          .seed = t.at("seed").get<std::uint64_t>()};
        if (c.pipeline.test_per_class < 0) fail(ErrorCode::ConfigError, "test_per_class must be >= 0");
    });

    section("gan", [&] {
        const auto& g = j.at("gan");
        for (const auto& v : g.at("variants")) c.gan.variants.push_back(gan::parse_variant(v.get<std::string>()));
        c.gan.image_size = g.at("image_size").get<int>();
        c.gan.latent_dim = g.at("latent_dim").get<int>();
        c.gan.width = g.at("width").get<int>();
        c.gan.per_label = g.at("per_label").get<bool>();
        c.gan.train = g.at("train").get<gan::TrainConfig>();
        c.gan.manifest = g.at("manifest").get<std::string>();
        auto probe = gan::GanSpec::for_variant(gan::Variant::Dcgan, c.gan.image_size);
        probe.latent_dim = c.gan.latent_dim;
        probe.width = c.gan.width;
        probe.validate();
    });

    section("style", [&] {
        const auto& s = j.at("style");
        c.style.config = s.at("config").get<style::StyleConfig>();
        c.style.config.validate();
        c.style.epochs = s.at("epochs").get<int>();
        c.style.seed = s.at("seed").get<std::uint64_t>();
        c.style.manifest = s.at("manifest").get<std::string>();
        c.style.trainer_dir = s.at("trainer_dir").get<std::string>();
        if (c.style.epochs < 0) fail(ErrorCode::ConfigError, "epochs must be >= 0");
    });

    section("gen", [&] {
        const auto& g = j.at("gen");
        c.gen.kind = g.at("kind").get<std::string>();
        c.gen.checkpoint = g.at("checkpoint").get<std::string>();
        c.gen.count = g.at("count").get<std::int64_t>();
        c.gen.label = g.at("label").get<std::string>();
        c.gen.seed = g.at("seed").get<std::uint64_t>();
        if (c.gen.kind != "gan" && c.gen.kind != "style") fail(ErrorCode::ConfigError, "kind must be gan or style");
        if (c.gen.count < 1) fail(ErrorCode::ConfigError, "count must be >= 1");
        if (!c.gen.label.empty()) parse_label(c.gen.label);
    });

    section("fid", [&] {
        const auto& f = j.at("fid");
        c.fid.extractor = f.at("extractor").get<std::string>();
        c.fid.native_dim = f.at("native_dim").get<int>();
        c.fid.native_input = f.at("native_input").get<int>();
        c.fid.native_width = f.at("native_width").get<int>();
        c.fid.native_seed = f.at("native_seed").get<std::uint64_t>();
        c.fid.set_a = f.at("set_a").get<std::string>();
        c.fid.set_b = f.at("set_b").get<std::string>();
        c.fid.samples = f.at("samples").get<std::int64_t>();
        if (c.fid.native_dim < 1 || c.fid.native_input < 8 || c.fid.native_width < 1) {
            fail(ErrorCode::ConfigError, "native extractor needs dim >= 1, input >= 8, width >= 1");
        }
        if (c.fid.samples < 0) fail(ErrorCode::ConfigError, "samples must be >= 0");
    });

    section("classifier", [&] {
        const auto& k = j.at("classifier");
        // The spec itself is validated by the commands that train, since a
        // pretrained path is only needed there.
        c.classifier.spec = k.at("spec").get<clf::ClassifierSpec>();
        c.classifier.mixing = k.at("mixing").get<clf::MixingConfig>();
        c.classifier.mixing.validate();
        c.classifier.p_grid = k.at("p_grid").get<std::vector<double>>();
        for (double p : c.classifier.p_grid) {
            if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::ConfigError, "p_grid values must lie in [0, 1]");
        }
        c.classifier.seeds = k.at("seeds").get<std::vector<std::uint64_t>>();
        if (c.classifier.seeds.empty()) fail(ErrorCode::ConfigError, "seeds must not be empty");
        for (const auto& a : k.at("archs")) c.classifier.archs.push_back(clf::parse_arch(a.get<std::string>()));
        c.classifier.manifest = k.at("manifest").get<std::string>();
    });

    section("gradcam", [&] {
        const auto& g = j.at("gradcam");
        c.gradcam.model = g.at("model").get<std::string>();
        c.gradcam.image = g.at("image").get<std::string>();
        c.gradcam.target_class = g.at("target_class").get<std::string>();
        c.gradcam.layer = g.at("layer").get<std::string>();
        c.gradcam.alpha = g.at("alpha").get<double>();
        parse_label(c.gradcam.target_class);
        if (!(c.gradcam.alpha >= 0.0 && c.gradcam.alpha <= 1.0)) fail(ErrorCode::ConfigError, "alpha must lie in [0, 1]");
    });

    section("study", [&] {
        const auto& s = j.at("study");
        c.study.store = s.at("store").get<std::string>();
        c.study.manifest = s.at("manifest").get<std::string>();
        c.study.split = s.at("split").get<std::string>();
        c.study.synthetic_dir = s.at("synthetic_dir").get<std::string>();
        c.study.host = s.at("host").get<std::string>();
        c.study.port = s.at("port").get<int>();
        c.study.image_size = s.at("image_size").get<int>();
        data::parse_split(c.study.split);
        if (c.study.port < 0 || c.study.port > 65535) fail(ErrorCode::ConfigError, "port out of range");
        if (c.study.image_size < 8) fail(ErrorCode::ConfigError, "image_size must be >= 8");
    });

    section("report", [&] {
        const auto& r = j.at("report");
        c.report.fid = read_named_paths(r.at("fid"));
        c.report.classifiers = read_named_paths(r.at("classifiers"));
        c.report.studies = read_named_paths(r.at("studies"));
        c.report.model = r.at("model").get<std::string>();
    });
    return c;
}

RunConfig RunConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    return from_json(j);
}

std::string RunConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        fail(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
    }
    const auto key = assignment.substr(0, eq);
    const auto text = assignment.substr(eq + 1);
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) fail(ErrorCode::ConfigError, "override key '" + key + "' has an empty component");
        if (!node->is_object()) *node = json::object();
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    const auto parsed = json::parse(text, nullptr, false);
    *node = parsed.is_discarded() ? json(text) : parsed;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace fgb::cli
