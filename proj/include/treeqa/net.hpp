#pragma once

#include <string>
#include <string_view>

namespace treeqa::net {

// "http://host:8080/v1/chat/completions" -> {"http://host:8080", "/v1/chat/completions"}
struct Endpoint {
    std::string base;
    std::string path;
};

Endpoint parse_endpoint(std::string_view url, std::string_view default_path = "/");

}  // namespace treeqa::net
