package com.acme.notification.client;

import org.springframework.cloud.openfeign.FeignClient;
import org.springframework.http.MediaType;
import org.springframework.web.bind.annotation.RequestMapping;
import org.springframework.web.bind.annotation.RequestMethod;

import com.acme.notification.domain.Recipient;

@FeignClient(name = "account-service")
public interface AccountServiceClient {

    @RequestMapping(method = RequestMethod.GET, value = "/accounts/{name}",
            consumes = MediaType.APPLICATION_JSON_UTF8_VALUE)
    Recipient getAccount(String name);
}
