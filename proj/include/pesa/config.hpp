#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pesa/backend.hpp"
#include "pesa/errors.hpp"
#include "pesa/templates.hpp"

namespace pesa {

inline const std::vector<std::string>& backend_roles() {
    static const std::vector<std::string> roles = {"claims", "grounds", "essay",
                                                   "annotator", "judge"};
    return roles;
}

namespace detail {

using IniSections = std::map<std::string, std::map<std::string, std::string>>;

/// `[section]` headers with `key = value` lines; `#` or `;` lines are
/// comments. Values keep embedded `=` characters.
inline IniSections parse_ini(const std::string& text) {
    IniSections sections;
    std::string current;
    std::istringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            current = trim(t.substr(1, t.size() - 2));
            sections[current];
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        sections[current][key] = value;
    }
    return sections;
}

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": " + value);
    }
}

inline long to_long(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + key + ": " + value);
    }
}

inline bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("bad boolean value for " + key + ": " + value);
}

}  // namespace detail

/// Full tool configuration: a default backend plus per-role overrides, the
/// global parallelism limit, plan cap, temperatures per role, and optional
/// template file overrides.
struct ToolConfig {
    BackendConfig default_backend{"http://localhost:8000/v1", "default-model", "", 60.0,
                                  3, 0.5};
    std::map<std::string, std::map<std::string, std::string>> role_overrides;
    std::size_t concurrency = 4;
    std::size_t max_claims = kDefaultMaxClaims;
    bool body_only = false;
    bool single_call_grounds = false;
    bool omit_prompt_in_annotation = false;
    std::map<std::string, double> temperatures = {
        {"claims", 0.7}, {"grounds", 0.7}, {"essay", 0.7}, {"annotator", 0.0}, {"judge", 0.0}};
    std::map<std::string, std::string> template_paths;  // see template_keys()

    static const std::vector<std::string>& template_keys() {
        static const std::vector<std::string> keys = {"stage_claims", "stage_grounds",
                                                      "stage_essay", "annotate_grounds",
                                                      "annotate_claims"};
        return keys;
    }

    /// The effective backend for a role: the default with any per-role
    /// overrides applied on top.
    BackendConfig backend_for(const std::string& role) const {
        BackendConfig c = default_backend;
        auto it = role_overrides.find(role);
        if (it != role_overrides.end()) {
            for (const auto& [key, value] : it->second) {
                if (key == "base_url") c.base_url = value;
                else if (key == "model") c.model_name = value;
                else if (key == "api_key_env") c.api_key_env = value;
                else if (key == "timeout_s") c.timeout_s = detail::to_double(key, value);
                else if (key == "max_retries")
                    c.max_retries = static_cast<int>(detail::to_long(key, value));
                else if (key == "retry_backoff_s")
                    c.retry_backoff_s = detail::to_double(key, value);
            }
        }
        return c;
    }

    double temperature_for(const std::string& role) const {
        auto it = temperatures.find(role);
        return it == temperatures.end() ? 0.0 : it->second;
    }

    StagePromptSet stage_templates() const {
        bool any = template_paths.count("stage_claims") || template_paths.count("stage_grounds") ||
                   template_paths.count("stage_essay");
        if (!any) return StagePromptSet::defaults();
        StagePromptSet defaults = StagePromptSet::defaults();
        auto path_or = [&](const char* key) {
            auto it = template_paths.find(key);
            return it == template_paths.end() ? std::string() : it->second;
        };
        std::string c = path_or("stage_claims");
        std::string g = path_or("stage_grounds");
        std::string e = path_or("stage_essay");
        return {c.empty() ? defaults.claims_template
                          : PromptTemplate(read_text_file(c), {"prompt"}),
                g.empty() ? defaults.grounds_template
                          : PromptTemplate(read_text_file(g), {"prompt", "claims"}),
                e.empty() ? defaults.essay_template
                          : PromptTemplate(read_text_file(e), {"prompt", "claims", "grounds"})};
    }

    AnnotationPromptSet annotation_templates() const {
        AnnotationPromptSet defaults = AnnotationPromptSet::defaults();
        auto it_g = template_paths.find("annotate_grounds");
        auto it_c = template_paths.find("annotate_claims");
        return {it_g == template_paths.end()
                    ? defaults.grounds_template
                    : PromptTemplate(read_text_file(it_g->second), {"prompt", "paragraph"}),
                it_c == template_paths.end()
                    ? defaults.claims_template
                    : PromptTemplate(read_text_file(it_c->second),
                                     {"prompt", "essay", "grounds"})};
    }

    void validate() const {
        if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
        if (max_claims < 1) throw ConfigError("max_claims must be >= 1");
        default_backend.validate();
        for (const auto& role : backend_roles()) backend_for(role).validate();
        for (const auto& [key, path] : template_paths) {
            if (!std::filesystem::exists(path))
                throw ConfigError("template file for " + key + " does not exist: " + path);
        }
    }

    static ToolConfig from_ini_text(const std::string& text) {
        auto sections = detail::parse_ini(text);
        ToolConfig cfg;

        static const std::set<std::string> backend_keys = {
            "base_url", "model", "api_key_env", "timeout_s", "max_retries",
            "retry_backoff_s"};

        for (const auto& [name, entries] : sections) {
            if (name == "backend") {
                for (const auto& [key, value] : entries) {
                    if (backend_keys.count(key) == 0)
                        throw ConfigError("unknown key in [backend]: " + key);
                    if (key == "base_url") cfg.default_backend.base_url = value;
                    else if (key == "model") cfg.default_backend.model_name = value;
                    else if (key == "api_key_env") cfg.default_backend.api_key_env = value;
                    else if (key == "timeout_s")
                        cfg.default_backend.timeout_s = detail::to_double(key, value);
                    else if (key == "max_retries")
                        cfg.default_backend.max_retries =
                            static_cast<int>(detail::to_long(key, value));
                    else if (key == "retry_backoff_s")
                        cfg.default_backend.retry_backoff_s = detail::to_double(key, value);
                }
            } else if (name.rfind("backend.", 0) == 0) {
                std::string role = name.substr(8);
                bool known = false;
                for (const auto& r : backend_roles()) known = known || r == role;
                if (!known) throw ConfigError("unknown backend role section: " + name);
                for (const auto& [key, value] : entries) {
                    if (backend_keys.count(key) == 0)
                        throw ConfigError("unknown key in [" + name + "]: " + key);
                    cfg.role_overrides[role][key] = value;
                }
            } else if (name == "run") {
                for (const auto& [key, value] : entries) {
                    if (key == "concurrency")
                        cfg.concurrency =
                            static_cast<std::size_t>(detail::to_long(key, value));
                    else if (key == "max_claims")
                        cfg.max_claims =
                            static_cast<std::size_t>(detail::to_long(key, value));
                    else if (key == "body_only")
                        cfg.body_only = detail::to_bool(key, value);
                    else if (key == "single_call_grounds")
                        cfg.single_call_grounds = detail::to_bool(key, value);
                    else if (key == "omit_prompt_in_annotation")
                        cfg.omit_prompt_in_annotation = detail::to_bool(key, value);
                    else
                        throw ConfigError("unknown key in [run]: " + key);
                }
            } else if (name == "temperature") {
                for (const auto& [key, value] : entries) {
                    bool known = false;
                    for (const auto& r : backend_roles()) known = known || r == key;
                    if (!known) throw ConfigError("unknown role in [temperature]: " + key);
                    cfg.temperatures[key] = detail::to_double(key, value);
                }
            } else if (name == "templates") {
                for (const auto& [key, value] : entries) {
                    bool known = false;
                    for (const auto& k : template_keys()) known = known || k == key;
                    if (!known) throw ConfigError("unknown key in [templates]: " + key);
                    cfg.template_paths[key] = value;
                }
            } else if (!name.empty()) {
                throw ConfigError("unknown section: [" + name + "]");
            } else if (!entries.empty()) {
                throw ConfigError("keys outside any section");
            }
        }
        return cfg;
    }

    static ToolConfig load(const std::string& path) {
        return from_ini_text(read_text_file(path));
    }
};

}  // namespace pesa
