#pragma once

/**
 * HTTP transport for the external judge.
 *
 * Contract: POST the filled grading template as a text/plain body to the
 * configured path; the response body must contain a grade out of 100
 * (first integer in the body, per parse_grade). Kept out of judge.hpp so
 * only judge-serving binaries compile the HTTP client.
 */

#include <wm/judge.hpp>

#include <httplib.h>

#include <stdexcept>
#include <string>

namespace wm::judge {

class HttpJudge final : public Judge {
 public:
  HttpJudge(std::string host, int port, std::string path = "/grade")
      : host_(std::move(host)), port_(port), path_(std::move(path)) {}

  double grade(const std::string& prompt,
               const std::string& response) const override {
    std::string body = fill_template(grading_template(), {prompt, response});
    httplib::Client client(host_, port_);
    client.set_read_timeout(30, 0);
    auto res = client.Post(path_.c_str(), body, "text/plain");
    if (!res) {
      throw std::runtime_error("judge transport: request to " + host_ +
                               " failed");
    }
    if (res->status != 200) {
      throw std::runtime_error("judge transport: HTTP status " +
                               std::to_string(res->status));
    }
    return parse_grade(res->body);
  }

 private:
  std::string host_;
  int port_;
  std::string path_;
};

}  // namespace wm::judge
