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

#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <string>
#include <thread>

#include "vqattack/oracle.hpp"

using namespace vqattack;
using namespace std::chrono_literals;

namespace {

// Local HTTP server with one well-behaved and several broken endpoints.
class FakeService : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto meta = [](const std::string& body) {
            return [body](const httplib::Request&, httplib::Response& res) {
                res.set_content(body, "application/json");
            };
        };
        const std::string good_meta = R"({"classes":2,"height":2,"width":2,"channels":1})";
        server_.Get("/good/meta", meta(good_meta));
        server_.Post("/good/classify", [](const httplib::Request& req, httplib::Response& res) {
            const auto img = load_image(std::span<const std::uint8_t>(
                reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()));
            const bool dark = img.at(0, 0, 0) < 128;
            res.set_content(dark ? R"({"probs":[0.75,0.25]})" : R"({"probs":[0.25,0.75]})",
                            "application/json");
        });
        server_.Get("/badsum/meta", meta(good_meta));
        server_.Post("/badsum/classify", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"probs":[0.3,0.5]})", "application/json");
        });
        server_.Get("/badjson/meta", meta(good_meta));
        server_.Post("/badjson/classify", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{probs:", "application/json");
        });
        server_.Get("/err/meta", meta(good_meta));
        server_.Post("/err/classify", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
        server_.Get("/slow/meta", meta(good_meta));
        server_.Post("/slow/classify", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(600ms);
            res.set_content(R"({"probs":[0.5,0.5]})", "application/json");
        });
        server_.Get("/nometa/meta", meta(R"({"classes":2,"height":2})"));
        server_.Get("/badmeta/meta", meta(R"([1,2,3])"));

        port_ = server_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void TearDown() override
    {
        server_.stop();
        if (thread_.joinable())
            thread_.join();
    }

    std::string url(const std::string& prefix) const
    {
        return "http://127.0.0.1:" + std::to_string(port_) + prefix;
    }

    static Errc code_of(const std::function<void()>& fn)
    {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return Errc{};
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_F(FakeService, ReadsMetaAndClassifies)
{
    const auto o = connect_remote(url("/good"), 2000ms);
    EXPECT_EQ(o->classes(), 2u);
    ASSERT_TRUE(o->shape().has_value());
    EXPECT_EQ(*o->shape(), (ImageShape{2, 2, 1}));
    EXPECT_EQ(o->classify(ImageTensor(2, 2, 1)).argmax(), 0u);
    EXPECT_EQ(o->classify(ImageTensor(2, 2, 1, {200, 0, 0, 0})).argmax(), 1u);
    EXPECT_EQ(o->query_count(), 2u);
    EXPECT_EQ(o->kind(), "remote");
}

TEST_F(FakeService, RejectsWrongShapeLocally)
{
    const auto o = connect_remote(url("/good"), 2000ms);
    EXPECT_EQ(code_of([&] { o->classify(ImageTensor(4, 4, 1)); }), Errc::shape_mismatch);
    EXPECT_EQ(o->query_count(), 0u);
}

TEST_F(FakeService, ProtocolViolations)
{
    for (const char* prefix : {"/badsum", "/badjson", "/err"}) {
        const auto o = connect_remote(url(prefix), 2000ms);
        EXPECT_EQ(code_of([&] { o->classify(ImageTensor(2, 2, 1)); }), Errc::oracle_protocol) << prefix;
        EXPECT_EQ(o->query_count(), 0u);
    }
    EXPECT_EQ(code_of([&] { connect_remote(url("/nometa"), 2000ms); }), Errc::oracle_protocol);
    EXPECT_EQ(code_of([&] { connect_remote(url("/badmeta"), 2000ms); }), Errc::oracle_protocol);
    EXPECT_EQ(code_of([&] { connect_remote(url("/missing"), 2000ms); }), Errc::oracle_protocol);
}

TEST_F(FakeService, SlowResponseTimesOut)
{
    const auto o = connect_remote(url("/slow"), 200ms);
    EXPECT_EQ(code_of([&] { o->classify(ImageTensor(2, 2, 1)); }), Errc::oracle_timeout);
}

TEST(RemoteOracle, ConnectionRefused)
{
    // Bind and release a port so nothing listens on it.
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    try {
        connect_remote("http://127.0.0.1:" + std::to_string(port), 500ms);
        FAIL();
    } catch (const Error& e) {
        EXPECT_TRUE(e.code() == Errc::oracle_transport || e.code() == Errc::oracle_timeout);
        EXPECT_TRUE(is_oracle_error(e.code()));
    }
}

TEST(RemoteOracle, RejectsBadEndpoints)
{
    EXPECT_THROW(connect_remote("ftp://x", 100ms), Error);
    EXPECT_THROW(connect_remote("http://", 100ms), Error);
    EXPECT_THROW(connect_remote("http://host:notaport", 100ms), Error);
    EXPECT_THROW(connect_remote("http://host:1", 0ms), Error);
}
