// Copyright 2026 The vqattack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <httplib.h>
#include <json.hpp>

#include <string>

#include "vqattack/error.hpp"
#include "vqattack/oracle.hpp"

namespace vqattack {

namespace {

struct Endpoint {
    std::string host;
    int port = 80;
    std::string prefix;  // path prefix without trailing slash
};

Endpoint parse_endpoint(const std::string& url)
{
    constexpr std::string_view scheme = "http://";
    if (url.rfind(scheme, 0) != 0)
        throw Error(Errc::invalid_argument, "oracle endpoint must start with http://: " + url);
    std::string rest = url.substr(scheme.size());
    Endpoint ep;
    const auto slash = rest.find('/');
    if (slash != std::string::npos) {
        ep.prefix = rest.substr(slash);
        rest = rest.substr(0, slash);
        while (!ep.prefix.empty() && ep.prefix.back() == '/')
            ep.prefix.pop_back();
    }
    const auto colon = rest.rfind(':');
    if (colon != std::string::npos) {
        const std::string port = rest.substr(colon + 1);
        if (port.empty() || port.find_first_not_of("0123456789") != std::string::npos ||
            port.size() > 5 || std::stoi(port) > 65535)
            throw Error(Errc::invalid_argument, "bad port in oracle endpoint: " + url);
        ep.port = std::stoi(port);
        rest = rest.substr(0, colon);
    }
    if (rest.empty())
        throw Error(Errc::invalid_argument, "missing host in oracle endpoint: " + url);
    ep.host = rest;
    return ep;
}

httplib::Client make_client(const Endpoint& ep, std::chrono::milliseconds timeout)
{
    httplib::Client client(ep.host, ep.port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    return client;
}

[[noreturn]] void throw_transport(const httplib::Result& res, const std::string& what,
                                  std::chrono::steady_clock::duration elapsed,
                                  std::chrono::milliseconds timeout)
{
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                            elapsed >= timeout);
    if (timed_out)
        throw Error(Errc::oracle_timeout, what + ": timed out after " +
                                              std::to_string(timeout.count()) + " ms");
    throw Error(Errc::oracle_transport, what + ": " + httplib::to_string(err));
}

nlohmann::json parse_json(const std::string& body, const std::string& what)
{
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::oracle_protocol, what + ": invalid JSON (" + e.what() + ")");
    }
}

std::size_t positive_field(const nlohmann::json& meta, const char* key)
{
    if (!meta.contains(key) || !meta[key].is_number_unsigned() || meta[key].get<std::size_t>() == 0)
        throw Error(Errc::oracle_protocol, std::string("/meta: missing or invalid \"") + key + "\"");
    return meta[key].get<std::size_t>();
}

}  // namespace

ProbabilityVector parse_probability_response(const std::string& body, std::size_t expected_classes)
{
    const auto doc = parse_json(body, "/classify");
    if (!doc.is_object() || !doc.contains("probs") || !doc["probs"].is_array())
        throw Error(Errc::oracle_protocol, "/classify: response lacks a \"probs\" array");
    std::vector<double> probs;
    for (const auto& v : doc["probs"]) {
        if (!v.is_number())
            throw Error(Errc::oracle_protocol, "/classify: non-numeric probability");
        probs.push_back(v.get<double>());
    }
    if (expected_classes != 0 && probs.size() != expected_classes)
        throw Error(Errc::oracle_protocol, "/classify: expected " + std::to_string(expected_classes) +
                                               " probabilities, got " + std::to_string(probs.size()));
    return ProbabilityVector(std::move(probs));
}

RemoteOracle::RemoteOracle(std::string endpoint, std::chrono::milliseconds timeout,
                           std::size_t classes, ImageShape shape)
    : Oracle(classes, shape, shape.height * shape.width * shape.channels),
      endpoint_(std::move(endpoint)), timeout_(timeout)
{
}

std::vector<double> RemoteOracle::raw_classify(const ImageTensor& img) const
{
    const auto ep = parse_endpoint(endpoint_);
    auto client = make_client(ep, timeout_);
    const auto body = save_image(img);
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(ep.prefix + "/classify", reinterpret_cast<const char*>(body.data()),
                           body.size(), "application/octet-stream");
    if (!res)
        throw_transport(res, "POST /classify", std::chrono::steady_clock::now() - start, timeout_);
    if (res->status != 200)
        throw Error(Errc::oracle_protocol, "POST /classify: HTTP " + std::to_string(res->status));
    const auto probs = parse_probability_response(res->body, classes());
    return {probs.values().begin(), probs.values().end()};
}

std::unique_ptr<RemoteOracle> connect_remote(const std::string& endpoint,
                                             std::chrono::milliseconds timeout)
{
    if (timeout.count() <= 0)
        throw Error(Errc::invalid_argument, "oracle timeout must be positive");
    const auto ep = parse_endpoint(endpoint);
    auto client = make_client(ep, timeout);
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Get(ep.prefix + "/meta");
    if (!res)
        throw_transport(res, "GET /meta", std::chrono::steady_clock::now() - start, timeout);
    if (res->status != 200)
        throw Error(Errc::oracle_protocol, "GET /meta: HTTP " + std::to_string(res->status));
    const auto meta = parse_json(res->body, "/meta");
    if (!meta.is_object())
        throw Error(Errc::oracle_protocol, "/meta: expected a JSON object");
    const ImageShape shape{positive_field(meta, "height"), positive_field(meta, "width"),
                           positive_field(meta, "channels")};
    if (shape.channels != 1 && shape.channels != 3)
        throw Error(Errc::oracle_protocol, "/meta: channels must be 1 or 3");
    return std::make_unique<RemoteOracle>(endpoint, timeout, positive_field(meta, "classes"), shape);
}

}  // namespace vqattack
