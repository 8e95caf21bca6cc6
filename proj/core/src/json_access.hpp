#pragma once

// Typed access to JSON documents with key-path context in every error.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvhc/errors.hpp"

namespace pvhc {

class JsonReader {
public:
    JsonReader(const nlohmann::json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ParseError(path_, "expected an object");
    }

    std::string path(const char* key) const { return path_ + "." + key; }
    const std::string& path() const { return path_; }
    bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    const nlohmann::json& raw(const char* key) const {
        if (!has(key)) throw ParseError(path(key), "missing required key");
        return node_.at(key);
    }

    std::string string(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_string()) throw ParseError(path(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string_or(const char* key, const std::string& fallback) const {
        return has(key) ? string(key) : fallback;
    }

    double number(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_number()) throw ParseError(path(key), "expected a number");
        return v.get<double>();
    }
    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    long long integer(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ParseError(path(key), "expected an integer");
        return v.get<long long>();
    }
    long long integer_or(const char* key, long long fallback) const { return has(key) ? integer(key) : fallback; }

    bool boolean(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_boolean()) throw ParseError(path(key), "expected true or false");
        return v.get<bool>();
    }
    bool boolean_or(const char* key, bool fallback) const { return has(key) ? boolean(key) : fallback; }

    JsonReader object(const char* key) const { return JsonReader(raw(key), path(key)); }

    std::vector<JsonReader> array(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_array()) throw ParseError(path(key), "expected an array");
        std::vector<JsonReader> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.emplace_back(v[i], path(key) + "[" + std::to_string(i) + "]");
        }
        return out;
    }

    std::vector<double> numbers(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_array()) throw ParseError(path(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ParseError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::vector<int> integers(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_array()) throw ParseError(path(key), "expected an array of integers");
        std::vector<int> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer()) {
                throw ParseError(path(key) + "[" + std::to_string(i) + "]", "expected an integer");
            }
            out.push_back(v[i].get<int>());
        }
        return out;
    }

private:
    const nlohmann::json& node_;
    std::string path_;
};

}  // namespace pvhc
